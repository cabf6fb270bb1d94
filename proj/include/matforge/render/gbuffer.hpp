#pragma once

// Screen-space material maps: one primary ray through each pixel centre,
// the hit's UV used to fetch the material, normal map applied in the
// tangent frame.

#include "matforge/render/material.hpp"
#include "matforge/render/scene.hpp"
#include "matforge/shading/brdf.hpp"

#include <cstdint>
#include <vector>

namespace matforge::render {

inline constexpr int kGBufferChannels = 10;

// Planar C x R x R channels: diffuse rgb (0-2), specular rgb (3-5),
// roughness (6), world shading normal xyz (7-9). Zero where nothing is hit.
struct GBuffer {
    int resolution = 0;
    std::vector<float> channels;
    std::vector<std::uint8_t> mask;  // 1 where a primary ray hit geometry
    std::vector<float> position;     // R*R*3 world hit positions
    std::vector<float> geo_normal;   // R*R*3 geometric normals

    float channel(int c, int x, int y) const
    {
        return channels[(std::size_t(c) * resolution + y) * resolution + x];
    }
};

// BRDF parameters at a surface point seen from direction wo (unit, pointing
// away from the surface). The mapped normal is bent toward wo when it
// faces away from the viewer.
shading::BrdfParams shade_point(const MaterialMaps& maps, const SurfaceHit& hit, const Vec3& wo);

// Throws ShapeError / ValueError on invalid maps, ValueError if
// resolution < 1.
GBuffer rasterize_gbuffer(const MaterialMaps& maps, int resolution, unsigned threads = 0);

} // namespace matforge::render
