#include "matforge/render/gbuffer.hpp"

#include "matforge/core/error.hpp"
#include "matforge/core/parallel.hpp"

#include <cmath>

namespace matforge::render {

using shading::cross;
using shading::dot;
using shading::normalize;

namespace {

constexpr double kMinFacing = 0.01;

} // namespace

shading::BrdfParams shade_point(const MaterialMaps& maps, const SurfaceHit& hit, const Vec3& wo)
{
    const MaterialSample m = lookup(maps, hit.u, hit.v);
    const Vec3 bitangent = cross(hit.normal, hit.tangent);
    const Vec3& tn = m.tangent_normal;
    Vec3 n = normalize(hit.tangent * tn.x + bitangent * tn.y + hit.normal * tn.z);
    const double facing = dot(n, wo);
    if (facing < kMinFacing)
        n = normalize(n + wo * (kMinFacing - facing));

    shading::BrdfParams p;
    p.diffuse = m.diffuse;
    p.specular = m.specular;
    p.roughness = m.roughness;
    p.normal = n;
    return p;
}

GBuffer rasterize_gbuffer(const MaterialMaps& maps, int resolution, unsigned threads)
{
    validate(maps);
    if (resolution < 1)
        throw ValueError("resolution must be >= 1");
    GBuffer g;
    g.resolution = resolution;
    const std::size_t hw = std::size_t(resolution) * resolution;
    g.channels.assign(hw * kGBufferChannels, 0.0f);
    g.mask.assign(hw, 0);
    g.position.assign(hw * 3, 0.0f);
    g.geo_normal.assign(hw * 3, 0.0f);

    parallel_for(std::size_t(resolution), threads, [&](std::size_t y) {
        for (int x = 0; x < resolution; ++x) {
            const Ray ray = camera_ray(x + 0.5, double(y) + 0.5, resolution);
            const auto hit = intersect(ray);
            if (!hit)
                continue;
            const std::size_t i = y * resolution + x;
            const auto p = shade_point(maps, *hit, -ray.dir);
            const double values[kGBufferChannels] = {p.diffuse.r,  p.diffuse.g,  p.diffuse.b, p.specular.r,
                                                     p.specular.g, p.specular.b, p.roughness, p.normal.x,
                                                     p.normal.y,   p.normal.z};
            for (int c = 0; c < kGBufferChannels; ++c)
                g.channels[c * hw + i] = float(values[c]);
            g.mask[i] = 1;
            const double pos[3] = {hit->position.x, hit->position.y, hit->position.z};
            const double gn[3] = {hit->normal.x, hit->normal.y, hit->normal.z};
            for (int c = 0; c < 3; ++c) {
                g.position[3 * i + c] = float(pos[c]);
                g.geo_normal[3 * i + c] = float(gn[c]);
            }
        }
    });
    return g;
}

} // namespace matforge::render
