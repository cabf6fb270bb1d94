#include "matforge/render/path_tracer.hpp"

#include "matforge/core/error.hpp"
#include "matforge/core/parallel.hpp"
#include "matforge/core/rng.hpp"
#include "matforge/core/sampler.hpp"
#include "matforge/render/gbuffer.hpp"
#include "matforge/render/scene.hpp"

#include <algorithm>
#include <cmath>

namespace matforge::render {

using shading::dot;
using shading::Rgb;

namespace {

constexpr int kRouletteStart = 3;

double power_heuristic(double a, double b)
{
    const double a2 = a * a;
    return a2 / (a2 + b * b);
}

// Lighting toward wi only counts if wi leaves the geometric surface on the
// same side as the viewer.
bool same_side(const SurfaceHit& hit, const Vec3& wo, const Vec3& wi)
{
    return dot(hit.normal, wo) * dot(hit.normal, wi) > 0.0;
}

Rgb clamp_contribution(const Rgb& c, double limit)
{
    const double m = c.max_channel();
    return m > limit ? c * (limit / m) : c;
}

// Every bounce consumes the same five dimensions (sky u1 u2, BRDF u1 u2,
// roulette) whether or not they are used, so a dimension always means the
// same decision across the samples of a pixel.
Rgb trace_path(const MaterialMaps& maps, const shading::SkyModel& sky, Ray ray, int max_bounces, double clamp,
               bool sky_nee, StratifiedSampler& rng)
{
    Rgb radiance;
    int bounce = 0;
    auto gather = [&](const Rgb& c) {
        radiance += (clamp > 0.0 && bounce > 0) ? clamp_contribution(c, clamp) : c;
    };
    Rgb throughput = Rgb::gray(1.0);
    double prev_pdf = 0.0;  // BRDF pdf of the ray being traced; 0 for camera rays
    const shading::SunLight sun = sky.has_sun() ? sky.sun() : shading::SunLight{};

    for (;; ++bounce) {
        const auto hit = intersect(ray);
        if (!hit) {
            const Rgb le = sky.radiance(ray.dir);
            const double weight = (bounce == 0 || !sky_nee)
                                      ? 1.0
                                      : power_heuristic(prev_pdf, shading::sky_sample_pdf(ray.dir));
            gather(throughput * le * weight);
            break;
        }
        if (bounce >= max_bounces)
            break;

        const double u_sky1 = rng.next(), u_sky2 = rng.next();
        const double u_brdf1 = rng.next(), u_brdf2 = rng.next();
        const double u_rr = rng.next();
        const Vec3 wo = -ray.dir;
        const shading::BrdfParams params = shade_point(maps, *hit, wo);

        // Sun, as a directional light of irradiance L_sun * solid angle.
        if (sky.has_sun() && same_side(*hit, wo, sun.direction)) {
            const double cos_i = dot(params.normal, sun.direction);
            if (cos_i > 0.0 && !occluded({offset_origin(*hit, sun.direction), sun.direction})) {
                const Rgb f = shading::eval_brdf(params, sun.direction, wo);
                gather(throughput * f * sun.radiance * (cos_i * sun.solid_angle));
            }
        }

        // Sky dome, cosine-sampled around +y, MIS-weighted against the BRDF.
        if (sky_nee) {
            const auto ls = shading::sample_sky({}, u_sky1, u_sky2);
            const double cos_i = dot(params.normal, ls.dir);
            if (ls.pdf > 0.0 && cos_i > 0.0 && same_side(*hit, wo, ls.dir)) {
                const Rgb f = shading::eval_brdf(params, ls.dir, wo);
                if (!f.is_black() && !occluded({offset_origin(*hit, ls.dir), ls.dir})) {
                    const double w = power_heuristic(ls.pdf, shading::pdf_brdf(params, wo, ls.dir));
                    gather(throughput * f * sky.radiance(ls.dir) * (cos_i * w / ls.pdf));
                }
            }
        }

        // Continue the path by BRDF sampling.
        const auto bs = shading::sample_brdf(params, wo, u_brdf1, u_brdf2);
        const double cos_i = dot(params.normal, bs.wi);
        if (cos_i <= 0.0 || !same_side(*hit, wo, bs.wi))
            break;
        const Rgb f = shading::eval_brdf(params, bs.wi, wo);
        if (f.is_black())
            break;
        throughput *= f * (cos_i / bs.pdf);
        prev_pdf = bs.pdf;

        if (bounce + 1 >= kRouletteStart) {
            const double survive = std::clamp(throughput.max_channel(), 0.1, 0.95);
            if (u_rr >= survive)
                break;
            throughput *= 1.0 / survive;
        }
        ray = {offset_origin(*hit, bs.wi), bs.wi};
    }
    return radiance;
}

} // namespace

void validate(const TraceOptions& o)
{
    if (o.resolution < 1)
        throw ValueError("resolution must be >= 1");
    if (o.spp < 1)
        throw ValueError("spp must be >= 1");
    if (o.max_bounces < 1)
        throw ValueError("max_bounces must be >= 1");
    if (!(o.indirect_clamp >= 0.0))
        throw ValueError("indirect_clamp must be >= 0");
}

Image path_trace(const MaterialMaps& maps, const shading::SkyModel& sky, const TraceOptions& options)
{
    validate(maps);
    validate(options);
    const int res = options.resolution;
    Image out = Image::zeros(res, res, 3);
    parallel_for(std::size_t(res) * res, options.threads, [&](std::size_t pixel) {
        StratifiedSampler rng(derive_seed(options.seed, pixel), std::uint32_t(options.spp));
        const double px = double(pixel % res), py = double(pixel / res);
        Rgb sum;
        for (int s = 0; s < options.spp; ++s) {
            rng.start_sample(std::uint32_t(s));
            double jx = rng.next(), jy = rng.next();
            if (!options.pixel_jitter)
                jx = jy = 0.5;
            sum += trace_path(maps, sky, camera_ray(px + jx, py + jy, res), options.max_bounces,
                              options.indirect_clamp, options.sky_nee, rng);
        }
        sum = sum / double(options.spp);
        out.pixels[3 * pixel + 0] = float(sum.r);
        out.pixels[3 * pixel + 1] = float(sum.g);
        out.pixels[3 * pixel + 2] = float(sum.b);
    });
    return out;
}

Image path_trace(const MaterialMaps& maps, const shading::SkyParams& sky, const TraceOptions& options)
{
    return path_trace(maps, shading::PerezSky(sky), options);
}

} // namespace matforge::render
