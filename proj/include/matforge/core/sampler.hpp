#pragma once

// Per-pixel padded Latin-hypercube sampler. For every sample dimension the
// spp samples of a pixel fall into distinct 1/spp strata, in an order given
// by a hashed permutation (Kensler 2013, "Correlated Multi-Jittered
// Sampling"), with a uniform jitter inside the stratum. Each value is
// marginally uniform and dimensions are independent, so estimators stay
// unbiased; only the main-effect variance is removed, so error still
// decays as O(1/N).

#include "matforge/core/rng.hpp"

#include <cmath>
#include <cstdint>

namespace matforge {

// Bijection of [0, l) selected by p.
constexpr std::uint32_t permute_index(std::uint32_t i, std::uint32_t l, std::uint32_t p) noexcept
{
    std::uint32_t w = l - 1;
    w |= w >> 1;
    w |= w >> 2;
    w |= w >> 4;
    w |= w >> 8;
    w |= w >> 16;
    do {
        i ^= p;
        i *= 0xe170893du;
        i ^= p >> 16;
        i ^= (i & w) >> 4;
        i ^= p >> 8;
        i *= 0x0929eb3fu;
        i ^= p >> 23;
        i ^= (i & w) >> 1;
        i *= 1u | p >> 27;
        i *= 0x6935fa69u;
        i ^= (i & w) >> 11;
        i *= 0x74dcb303u;
        i ^= (i & w) >> 2;
        i *= 0x9e501cc3u;
        i ^= (i & w) >> 2;
        i *= 0xc860a3dfu;
        i &= w;
        i ^= i >> 5;
    } while (i >= l);
    return (i + p) % l;
}

class StratifiedSampler {
public:
    StratifiedSampler(std::uint64_t seed, std::uint32_t spp) noexcept : seed_(seed), spp_(spp) {}

    void start_sample(std::uint32_t index) noexcept
    {
        sample_ = index;
        dim_ = 0;
    }

    // Next dimension of the current sample, in [0, 1).
    double next() noexcept
    {
        const std::uint64_t h = derive_seed(seed_, dim_++);
        const std::uint32_t stratum = permute_index(sample_, spp_, static_cast<std::uint32_t>(h));
        const double jitter = static_cast<double>(Rng::mix(h + sample_) >> 11) * 0x1.0p-53;
        const double u = (stratum + jitter) / spp_;
        return u < kOneMinusEps ? u : kOneMinusEps;
    }

private:
    static constexpr double kOneMinusEps = 1.0 - 0x1.0p-53;
    std::uint64_t seed_;
    std::uint32_t spp_;
    std::uint32_t sample_ = 0;
    std::uint64_t dim_ = 0;
};

} // namespace matforge
