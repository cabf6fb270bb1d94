#pragma once

// Monte-Carlo estimate of the pixel radiance integral: next-event estimation
// toward the sun, BRDF sampling, optional next-event estimation of the sky
// dome combined with BRDF sampling by the power heuristic, Russian roulette
// after the third bounce. Sample dimensions are stratified per pixel.

#include "matforge/render/image.hpp"
#include "matforge/render/material.hpp"
#include "matforge/shading/sky.hpp"

#include <cstdint>

namespace matforge::render {

struct TraceOptions {
    int resolution = 64;
    int spp = 64;
    int max_bounces = 5;  // surface interactions per path
    std::uint64_t seed = 0;
    unsigned threads = 0;       // 0 = MATFORGE_THREADS or hardware count
    bool pixel_jitter = true;   // false: every sample through the pixel centre
    // When > 0, each lighting contribution gathered after the first surface
    // interaction is scaled down so its largest channel does not exceed this
    // value. Biased; off by default, used for low-spp training targets.
    double indirect_clamp = 0.0;
    // Cosine-sampled dome lighting at every vertex, MIS-weighted. Off by
    // default: the dome is smooth, BRDF sampling alone already matches it,
    // and the extra strategy only added variance in measurements.
    bool sky_nee = false;
};

void validate(const TraceOptions& options);

// Linear HDR radiance. Each pixel draws from its own stream derived from
// (seed, pixel index), so the image does not depend on the thread count.
Image path_trace(const MaterialMaps& maps, const shading::SkyModel& sky, const TraceOptions& options);
Image path_trace(const MaterialMaps& maps, const shading::SkyParams& sky, const TraceOptions& options);

} // namespace matforge::render
