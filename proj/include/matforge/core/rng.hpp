#pragma once

#include <cstdint>

namespace matforge {

// SplitMix64 (Steele, Lea & Flood 2014). The state is a plain counter
// advanced by the golden-ratio increment and each output is a bijective
// mix of the counter, so streams are reproducible on every platform and
// independent streams are obtained by hashing (seed, stream id).
class Rng {
public:
    explicit constexpr Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

    constexpr std::uint64_t next_u64() noexcept
    {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    // Uniform in [0, 1) with 53 bits of mantissa.
    constexpr double uniform() noexcept
    {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    constexpr double uniform(double lo, double hi) noexcept
    {
        return lo + (hi - lo) * uniform();
    }

    // Uniform float in [0, 1) with 24 bits of mantissa.
    constexpr float uniform_float() noexcept
    {
        return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f;
    }

    // Unbiased integer in [0, n) by rejection.
    constexpr std::uint64_t below(std::uint64_t n) noexcept
    {
        if (n <= 1) {
            return 0;
        }
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = next_u64();
        while (x >= limit) {
            x = next_u64();
        }
        return x % n;
    }

    constexpr std::uint64_t state() const noexcept { return state_; }

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept
    {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// Seed of an independent sub-stream, e.g. per pixel or per dataset entry.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept
{
    return Rng::mix(Rng::mix(seed ^ 0xD1B54A32D192ED03ull) + Rng::mix(stream + 0x8CB92BA72F3D8DD7ull));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept
{
    return derive_seed(derive_seed(seed, a), b);
}

} // namespace matforge
