#include "matforge/render/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace matforge::render {

using shading::cross;
using shading::dot;
using shading::kPi;
using shading::length;
using shading::normalize;

namespace {

constexpr double kOffset = 1e-4;
constexpr double kTorusHitEps = 1e-7;
constexpr int kTorusMaxSteps = 400;
constexpr double kGroundTile = 4.0;  // world units per texture repeat

// Direction of increasing azimuth around +y at p (u tangent of the
// spherical mapping).
Vec3 azimuth_tangent(const Vec3& p)
{
    const Vec3 t{p.z, 0.0, -p.x};
    const double len = length(t);
    return len > 1e-12 ? t / len : Vec3{1.0, 0.0, 0.0};
}

// Spherical mapping shared by sphere and torus: direction from the origin.
void spherical_uv(const Vec3& p, double& u, double& v)
{
    const double r = length(p);
    u = std::atan2(p.x, p.z) / (2.0 * kPi) + 0.5;
    v = std::acos(std::clamp(p.y / r, -1.0, 1.0)) / kPi;
}

std::optional<double> hit_sphere(const Ray& ray, double t_min, double t_max)
{
    const double b = dot(ray.origin, ray.dir);
    const double c = dot(ray.origin, ray.origin) - 1.0;
    const double disc = b * b - c;
    if (disc < 0.0)
        return std::nullopt;
    const double s = std::sqrt(disc);
    // Numerically stable pair of roots.
    const double q = b > 0.0 ? -b - s : -b + s;
    double t0 = q, t1 = (q != 0.0) ? c / q : -b;
    if (t0 > t1)
        std::swap(t0, t1);
    if (t0 > t_min && t0 < t_max)
        return t0;
    if (t1 > t_min && t1 < t_max)
        return t1;
    return std::nullopt;
}

double torus_sdf(const Vec3& p)
{
    const double qx = std::sqrt(p.x * p.x + p.z * p.z) - kTorusMajor;
    return std::sqrt(qx * qx + p.y * p.y) - kTorusMinor;
}

Vec3 torus_normal(const Vec3& p)
{
    const double rho = std::sqrt(p.x * p.x + p.z * p.z);
    const double qx = rho - kTorusMajor;
    const Vec3 n{rho > 0.0 ? p.x / rho * qx : qx, p.y, rho > 0.0 ? p.z / rho * qx : 0.0};
    return normalize(n);
}

// Clip the ray to the torus bounding cylinder and slab, then sphere trace
// the exact distance field.
std::optional<double> hit_torus(const Ray& ray, double t_min, double t_max)
{
    double lo = t_min, hi = t_max;
    const double r = kTorusMinor;
    if (std::abs(ray.dir.y) < 1e-12) {
        if (std::abs(ray.origin.y) > r)
            return std::nullopt;
    } else {
        double a = (-r - ray.origin.y) / ray.dir.y;
        double b = (r - ray.origin.y) / ray.dir.y;
        if (a > b)
            std::swap(a, b);
        lo = std::max(lo, a);
        hi = std::min(hi, b);
    }
    const double rb = kTorusMajor + kTorusMinor;
    const double ax = ray.dir.x * ray.dir.x + ray.dir.z * ray.dir.z;
    const double bx = ray.origin.x * ray.dir.x + ray.origin.z * ray.dir.z;
    const double cx = ray.origin.x * ray.origin.x + ray.origin.z * ray.origin.z - rb * rb;
    if (ax < 1e-12) {
        if (cx > 0.0)
            return std::nullopt;
    } else {
        const double disc = bx * bx - ax * cx;
        if (disc < 0.0)
            return std::nullopt;
        const double s = std::sqrt(disc);
        lo = std::max(lo, (-bx - s) / ax);
        hi = std::min(hi, (-bx + s) / ax);
    }
    if (!(lo < hi))
        return std::nullopt;

    double t = lo;
    for (int i = 0; i < kTorusMaxSteps && t <= hi; ++i) {
        const double d = torus_sdf(ray.origin + ray.dir * t);
        if (d < kTorusHitEps)
            return t > t_min ? std::optional<double>(t) : std::nullopt;
        t += d;
    }
    return std::nullopt;
}

std::optional<double> hit_ground(const Ray& ray, double t_min, double t_max)
{
    if (ray.dir.y >= 0.0 || ray.origin.y <= kGroundY)
        return std::nullopt;
    const double t = (kGroundY - ray.origin.y) / ray.dir.y;
    if (t > t_min && t < t_max)
        return t;
    return std::nullopt;
}

} // namespace

std::optional<SurfaceHit> intersect(const Ray& ray, double t_min, double t_max)
{
    Object which = Object::Sphere;
    double best = t_max;
    bool found = false;
    if (auto t = hit_sphere(ray, t_min, best)) {
        best = *t;
        which = Object::Sphere;
        found = true;
    }
    if (auto t = hit_torus(ray, t_min, best)) {
        best = *t;
        which = Object::Torus;
        found = true;
    }
    if (auto t = hit_ground(ray, t_min, best)) {
        best = *t;
        which = Object::Ground;
        found = true;
    }
    if (!found)
        return std::nullopt;

    SurfaceHit hit;
    hit.t = best;
    hit.object = which;
    hit.position = ray.origin + ray.dir * best;
    const Vec3& p = hit.position;
    switch (which) {
    case Object::Sphere:
        hit.normal = normalize(p);
        hit.tangent = azimuth_tangent(p);
        spherical_uv(p, hit.u, hit.v);
        break;
    case Object::Torus:
        hit.normal = torus_normal(p);
        hit.tangent = azimuth_tangent(p);
        spherical_uv(p, hit.u, hit.v);
        break;
    case Object::Ground:
        hit.normal = {0.0, 1.0, 0.0};
        hit.tangent = {1.0, 0.0, 0.0};
        hit.u = p.x / kGroundTile + 0.5;
        hit.v = p.z / kGroundTile + 0.5;
        break;
    }
    // Orthogonalize in case of round-off.
    hit.tangent = normalize(hit.tangent - hit.normal * dot(hit.tangent, hit.normal));
    return hit;
}

bool occluded(const Ray& ray, double t_max)
{
    return hit_sphere(ray, 0.0, t_max) || hit_ground(ray, 0.0, t_max) || hit_torus(ray, 0.0, t_max);
}

Vec3 offset_origin(const SurfaceHit& hit, const Vec3& toward)
{
    const double side = dot(hit.normal, toward) >= 0.0 ? 1.0 : -1.0;
    return hit.position + hit.normal * (side * kOffset);
}

Ray camera_ray(double x, double y, int resolution)
{
    const Vec3 forward = normalize(kCameraTarget - kCameraPosition);
    const Vec3 right = normalize(cross(forward, Vec3{0.0, 1.0, 0.0}));
    const Vec3 up = cross(right, forward);
    const double half = std::tan(0.5 * kCameraFovDeg * kPi / 180.0);
    const double sx = (2.0 * x / resolution - 1.0) * half;
    const double sy = (1.0 - 2.0 * y / resolution) * half;
    return {kCameraPosition, normalize(forward + right * sx + up * sy)};
}

} // namespace matforge::render
