#pragma once

#include <algorithm>
#include <cmath>

namespace matforge::shading {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3& operator+=(const Vec3& o)
    {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalize(const Vec3& v) { return v / length(v); }

// Reflect v about unit n.
constexpr Vec3 reflect(const Vec3& v, const Vec3& n) { return n * (2.0 * dot(v, n)) - v; }

// Orthonormal basis around unit n (Duff et al. 2017, branchless).
struct Frame {
    Vec3 t, b, n;

    static Frame around(const Vec3& n)
    {
        const double sign = std::copysign(1.0, n.z);
        const double a = -1.0 / (sign + n.z);
        const double c = n.x * n.y * a;
        return {{1.0 + sign * n.x * n.x * a, sign * c, -sign * n.x}, {c, sign + n.y * n.y * a, -n.y}, n};
    }

    Vec3 to_world(const Vec3& local) const { return t * local.x + b * local.y + n * local.z; }
    Vec3 to_local(const Vec3& world) const { return {dot(world, t), dot(world, b), dot(world, n)}; }
};

// Cosine-weighted direction around +z in a local frame.
inline Vec3 cosine_hemisphere(double u1, double u2) noexcept
{
    const double r = std::sqrt(u1);
    const double phi = 2.0 * kPi * u2;
    return {r * std::cos(phi), r * std::sin(phi), std::sqrt(std::max(0.0, 1.0 - u1))};
}

struct Rgb {
    double r = 0.0, g = 0.0, b = 0.0;

    constexpr Rgb operator+(const Rgb& o) const { return {r + o.r, g + o.g, b + o.b}; }
    constexpr Rgb operator-(const Rgb& o) const { return {r - o.r, g - o.g, b - o.b}; }
    constexpr Rgb operator*(const Rgb& o) const { return {r * o.r, g * o.g, b * o.b}; }
    constexpr Rgb operator*(double s) const { return {r * s, g * s, b * s}; }
    constexpr Rgb operator/(double s) const { return {r / s, g / s, b / s}; }
    constexpr Rgb& operator+=(const Rgb& o)
    {
        r += o.r;
        g += o.g;
        b += o.b;
        return *this;
    }
    constexpr Rgb& operator*=(const Rgb& o)
    {
        r *= o.r;
        g *= o.g;
        b *= o.b;
        return *this;
    }
    constexpr Rgb& operator*=(double s)
    {
        r *= s;
        g *= s;
        b *= s;
        return *this;
    }
    constexpr bool operator==(const Rgb&) const = default;

    constexpr double max_channel() const { return std::max({r, g, b}); }
    constexpr double min_channel() const { return std::min({r, g, b}); }
    constexpr bool is_black() const { return r == 0.0 && g == 0.0 && b == 0.0; }
    // Rec. 709 luminance.
    constexpr double luminance() const { return 0.2126 * r + 0.7152 * g + 0.0722 * b; }
    static constexpr Rgb gray(double v) { return {v, v, v}; }
};

constexpr Rgb operator*(double s, const Rgb& c) { return c * s; }

} // namespace matforge::shading
