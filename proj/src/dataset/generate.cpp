#include "matforge/dataset/generate.hpp"

#include "matforge/core/error.hpp"
#include "matforge/core/png_io.hpp"
#include "matforge/core/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace matforge::dataset {

using shading::Rgb;

namespace {

// Stream ids inside one map seed.
enum Stream : std::uint64_t { kCells = 1, kPalette, kNoiseColour, kNoiseRough, kNoiseHeight, kBump };

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Value noise with period `period` lattice cells over the unit square, so it
// tiles seamlessly.
class TileNoise {
public:
    TileNoise(std::uint64_t seed, int period) : period_(period), values_(std::size_t(period) * period)
    {
        Rng rng(seed);
        for (auto& v : values_)
            v = rng.uniform();
    }

    double operator()(double u, double v) const
    {
        const double x = u * period_, y = v * period_;
        const double fx = std::floor(x), fy = std::floor(y);
        const double tx = smooth(x - fx), ty = smooth(y - fy);
        const int x0 = wrap(int(fx)), y0 = wrap(int(fy));
        const int x1 = wrap(x0 + 1), y1 = wrap(y0 + 1);
        const double a = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * tx;
        const double b = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * tx;
        return a + (b - a) * ty;
    }

private:
    int wrap(int i) const { return ((i % period_) + period_) % period_; }
    double at(int x, int y) const { return values_[std::size_t(y) * period_ + x]; }

    int period_;
    std::vector<double> values_;
};

// Sum of octaves with halving amplitude, normalized to [0,1].
double fbm(const std::vector<TileNoise>& octaves, double u, double v)
{
    double acc = 0.0, amp = 1.0, norm = 0.0;
    for (const auto& o : octaves) {
        acc += amp * o(u, v);
        norm += amp;
        amp *= 0.5;
    }
    return acc / norm;
}

std::vector<TileNoise> make_octaves(std::uint64_t seed, int base_period, int count)
{
    std::vector<TileNoise> out;
    for (int i = 0; i < count; ++i)
        out.emplace_back(derive_seed(seed, std::uint64_t(i)), base_period << i);
    return out;
}

struct BaseMaterial {
    Rgb diffuse;
    Rgb specular;
    double roughness;
};

Rgb hsv(double h, double s, double v)
{
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    Rgb rgb;
    if (hp < 1)
        rgb = {c, x, 0};
    else if (hp < 2)
        rgb = {x, c, 0};
    else if (hp < 3)
        rgb = {0, c, x};
    else if (hp < 4)
        rgb = {0, x, c};
    else if (hp < 5)
        rgb = {x, 0, c};
    else
        rgb = {c, 0, x};
    return rgb + Rgb::gray(v - c);
}

BaseMaterial random_base(Rng& rng)
{
    BaseMaterial m;
    const double hue = rng.uniform();
    if (rng.uniform() < 0.7) {
        m.diffuse = hsv(hue, rng.uniform(0.1, 0.8), rng.uniform(0.2, 0.9));
        m.specular = Rgb::gray(rng.uniform(0.02, 0.1));
        m.roughness = rng.uniform(0.2, 0.9);
    } else {
        m.diffuse = hsv(hue, rng.uniform(0.0, 0.5), rng.uniform(0.0, 0.05));
        m.specular = hsv(hue, rng.uniform(0.0, 0.4), rng.uniform(0.5, 1.0));
        m.roughness = rng.uniform(0.05, 0.5);
    }
    return m;
}

void put_rgb(std::vector<float>& dst, std::size_t i, const Rgb& c)
{
    dst[3 * i + 0] = quantize_value(c.r);
    dst[3 * i + 1] = quantize_value(c.g);
    dst[3 * i + 2] = quantize_value(c.b);
}

Rgb clamp01(const Rgb& c)
{
    return {std::clamp(c.r, 0.0, 1.0), std::clamp(c.g, 0.0, 1.0), std::clamp(c.b, 0.0, 1.0)};
}

} // namespace

float dequantize(std::uint8_t k) noexcept { return float(k) / 255.0f; }

float quantize_value(double v) noexcept { return dequantize(quantize_unit(float(v))); }

MaterialMaps gen_uniform_map(std::uint64_t seed, int size)
{
    if (size < 1)
        throw ValueError("map size must be >= 1");
    Rng rng(seed);
    Rgb diffuse, specular;
    diffuse.r = rng.uniform();
    diffuse.g = rng.uniform();
    diffuse.b = rng.uniform();
    specular.r = rng.uniform();
    specular.g = rng.uniform();
    specular.b = rng.uniform();
    const double roughness = rng.uniform(shading::kMinRoughness, 1.0);
    MaterialMaps m = MaterialMaps::uniform(size, diffuse, specular, roughness);
    for (auto* channel : {&m.diffuse, &m.specular, &m.roughness, &m.normal})
        for (float& v : *channel)
            v = quantize_value(v);
    return m;
}

MaterialMaps gen_svbrdf_map(std::uint64_t seed, int size)
{
    if (size < 16)
        throw ValueError("spatially varying maps need size >= 16");

    // Voronoi sites on the torus and a small palette of base materials.
    Rng cell_rng(derive_seed(seed, kCells));
    const int n_sites = 3 + int(cell_rng.below(10));
    std::vector<std::array<double, 2>> sites(n_sites);
    for (auto& s : sites)
        s = {cell_rng.uniform(), cell_rng.uniform()};
    Rng palette_rng(derive_seed(seed, kPalette));
    const int n_bases = 2 + int(palette_rng.below(2));
    std::vector<BaseMaterial> bases;
    for (int i = 0; i < n_bases; ++i)
        bases.push_back(random_base(palette_rng));
    std::vector<int> site_base(n_sites);
    for (int i = 0; i < n_sites; ++i)
        site_base[i] = i < n_bases ? i : int(palette_rng.below(n_bases));

    const auto colour_noise = make_octaves(derive_seed(seed, kNoiseColour), 4, 4);
    const auto rough_noise = make_octaves(derive_seed(seed, kNoiseRough), 4, 4);
    const auto height_noise = make_octaves(derive_seed(seed, kNoiseHeight), 4, 4);
    Rng bump_rng(derive_seed(seed, kBump));
    const double bump = bump_rng.uniform(0.02, 0.06);
    const double groove_depth = bump_rng.uniform(0.0, 0.4);
    constexpr double kGrooveWidth = 0.02;

    const std::size_t n = std::size_t(size) * size;
    MaterialMaps m;
    m.size = size;
    m.diffuse.resize(n * 3);
    m.specular.resize(n * 3);
    m.roughness.resize(n);
    m.normal.resize(n * 3);
    std::vector<double> height(n);

    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double u = (x + 0.5) / size, v = (y + 0.5) / size;
            double d1 = 1e9, d2 = 1e9;
            int nearest = 0;
            for (int s = 0; s < n_sites; ++s) {
                double dx = std::abs(u - sites[s][0]), dy = std::abs(v - sites[s][1]);
                dx = std::min(dx, 1.0 - dx);
                dy = std::min(dy, 1.0 - dy);
                const double d = std::sqrt(dx * dx + dy * dy);
                if (d < d1) {
                    d2 = d1;
                    d1 = d;
                    nearest = s;
                } else if (d < d2) {
                    d2 = d;
                }
            }
            const BaseMaterial& base = bases[site_base[nearest]];
            const std::size_t i = std::size_t(y) * size + x;
            const double cn = fbm(colour_noise, u, v);
            const double rn = fbm(rough_noise, u, v);
            put_rgb(m.diffuse, i, clamp01(base.diffuse * (0.6 + 0.8 * cn)));
            put_rgb(m.specular, i, clamp01(base.specular * (0.85 + 0.3 * cn)));
            m.roughness[i] = quantize_value(std::clamp(base.roughness + 0.4 * (rn - 0.5), shading::kMinRoughness, 1.0));
            const double border = 0.5 * (d2 - d1);
            height[i] = fbm(height_noise, u, v) - groove_depth * std::exp(-std::pow(border / kGrooveWidth, 2));
        }
    }

    // Normal from the wrapped central-difference gradient in uv units.
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            auto h = [&](int xi, int yi) {
                return height[std::size_t((yi + size) % size) * size + std::size_t((xi + size) % size)];
            };
            const double du = (h(x + 1, y) - h(x - 1, y)) * size * 0.5;
            const double dv = (h(x, y + 1) - h(x, y - 1)) * size * 0.5;
            const shading::Vec3 nrm = shading::normalize(shading::Vec3{-bump * du, -bump * dv, 1.0});
            const std::size_t i = std::size_t(y) * size + x;
            m.normal[3 * i + 0] = quantize_value(0.5 * nrm.x + 0.5);
            m.normal[3 * i + 1] = quantize_value(0.5 * nrm.y + 0.5);
            m.normal[3 * i + 2] = quantize_value(0.5 * nrm.z + 0.5);
        }
    }
    return m;
}

} // namespace matforge::dataset
