#pragma once

// The fixed shaderball: unit sphere at the origin, an equatorial torus
// (major radius 1.25, minor 0.12) and an infinite ground plane at y = -1,
// seen from a fixed pinhole camera.

#include "matforge/shading/vec.hpp"

#include <optional>

namespace matforge::render {

using shading::Vec3;

inline constexpr double kTorusMajor = 1.25;
inline constexpr double kTorusMinor = 0.12;
inline constexpr double kGroundY = -1.0;
inline constexpr Vec3 kCameraPosition{0.0, 0.6, 3.2};
inline constexpr Vec3 kCameraTarget{0.0, 0.0, 0.0};
inline constexpr double kCameraFovDeg = 35.0;

enum class Object { Sphere = 0, Torus = 1, Ground = 2 };

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit
};

struct SurfaceHit {
    double t = 0.0;
    Vec3 position;
    Vec3 normal;   // geometric, unit, outward
    Vec3 tangent;  // unit, orthogonal to normal, along increasing u
    double u = 0.0, v = 0.0;
    Object object = Object::Sphere;
};

// Closest hit with t in (t_min, t_max).
std::optional<SurfaceHit> intersect(const Ray& ray, double t_min = 0.0, double t_max = 1e30);

// True if anything blocks the ray before t_max.
bool occluded(const Ray& ray, double t_max = 1e30);

// Ray origin lifted off a surface to the side of `toward`.
Vec3 offset_origin(const SurfaceHit& hit, const Vec3& toward);

// Camera ray through image position (x, y) in pixels, (0, 0) the top-left
// corner, for a square image of `resolution` pixels.
Ray camera_ray(double x, double y, int resolution);

} // namespace matforge::render
