#pragma once

#include "matforge/tensor/parameter.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace matforge::tensor {

struct AdamConfig {
    float lr = 1e-2f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
};

// First/second moments per parameter (matched by position) and the step
// counter. Moments are allocated on the first step.
struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<std::vector<float>> m;
    std::vector<std::vector<float>> v;
};

// One bias-corrected Adam update of every parameter, then clears the grads.
// Throws ValueError naming the first parameter without a gradient; no
// parameter is modified in that case.
void adam_step(std::span<Parameter> params, AdamState& state);

// Uniform samples in +-sqrt(6 / (fan_in + fan_out)), deterministic per seed.
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, std::uint64_t seed);

} // namespace matforge::tensor
