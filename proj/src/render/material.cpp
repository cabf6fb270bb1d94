#include "matforge/render/material.hpp"

#include "matforge/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace matforge::render {

namespace {

void check_channel(const std::vector<float>& data, std::size_t expected, const char* name)
{
    if (data.empty())
        throw ShapeError(std::string("missing ") + name + " map");
    if (data.size() != expected)
        throw ShapeError(std::string(name) + " map has " + std::to_string(data.size()) + " values, expected "
                         + std::to_string(expected));
    for (float v : data) {
        if (!(v >= 0.0f && v <= 1.0f))
            throw ValueError(std::string(name) + " map value " + std::to_string(v) + " outside [0,1]");
    }
}

double lerp(double a, double b, double t) { return a + (b - a) * t; }

} // namespace

MaterialMaps MaterialMaps::uniform(int size, Rgb diffuse, Rgb specular, double roughness)
{
    MaterialMaps m;
    m.size = size;
    const std::size_t n = std::size_t(size) * size;
    m.diffuse.resize(n * 3);
    m.specular.resize(n * 3);
    m.roughness.assign(n, float(roughness));
    m.normal.resize(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        m.diffuse[3 * i + 0] = float(diffuse.r);
        m.diffuse[3 * i + 1] = float(diffuse.g);
        m.diffuse[3 * i + 2] = float(diffuse.b);
        m.specular[3 * i + 0] = float(specular.r);
        m.specular[3 * i + 1] = float(specular.g);
        m.specular[3 * i + 2] = float(specular.b);
        m.normal[3 * i + 0] = 0.5f;
        m.normal[3 * i + 1] = 0.5f;
        m.normal[3 * i + 2] = 1.0f;
    }
    return m;
}

void validate(const MaterialMaps& maps)
{
    if (maps.size < 1)
        throw ShapeError("material maps must be square with size >= 1");
    const std::size_t n = std::size_t(maps.size) * maps.size;
    check_channel(maps.diffuse, n * 3, "diffuse");
    check_channel(maps.specular, n * 3, "specular");
    check_channel(maps.roughness, n, "roughness");
    check_channel(maps.normal, n * 3, "normal");
}

Vec3 decode_normal(double r, double g, double b)
{
    const Vec3 n{2.0 * r - 1.0, 2.0 * g - 1.0, 2.0 * b - 1.0};
    const double len = shading::length(n);
    if (!(len > 1e-6))
        return {0.0, 0.0, 1.0};
    return n / len;
}

MaterialSample lookup(const MaterialMaps& maps, double u, double v)
{
    const int s = maps.size;
    const double x = (u - std::floor(u)) * s - 0.5;
    const double y = (v - std::floor(v)) * s - 0.5;
    const double fx0 = std::floor(x), fy0 = std::floor(y);
    const double tx = x - fx0, ty = y - fy0;
    auto wrap = [s](long i) { return int(((i % s) + s) % s); };
    const int x0 = wrap(long(fx0)), x1 = wrap(long(fx0) + 1);
    const int y0 = wrap(long(fy0)), y1 = wrap(long(fy0) + 1);

    auto fetch = [&](const std::vector<float>& data, int comps, int c) {
        auto at = [&](int xi, int yi) { return double(data[(std::size_t(yi) * s + xi) * comps + c]); };
        return lerp(lerp(at(x0, y0), at(x1, y0), tx), lerp(at(x0, y1), at(x1, y1), tx), ty);
    };

    MaterialSample out;
    out.diffuse = {fetch(maps.diffuse, 3, 0), fetch(maps.diffuse, 3, 1), fetch(maps.diffuse, 3, 2)};
    out.specular = {fetch(maps.specular, 3, 0), fetch(maps.specular, 3, 1), fetch(maps.specular, 3, 2)};
    out.roughness = std::clamp(fetch(maps.roughness, 1, 0), shading::kMinRoughness, 1.0);
    out.tangent_normal = decode_normal(fetch(maps.normal, 3, 0), fetch(maps.normal, 3, 1), fetch(maps.normal, 3, 2));
    return out;
}

} // namespace matforge::render
