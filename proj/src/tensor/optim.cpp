#include "matforge/tensor/optim.hpp"

#include "matforge/core/error.hpp"
#include "matforge/core/rng.hpp"

#include <cmath>

namespace matforge::tensor {

void adam_step(std::span<Parameter> params, AdamState& state)
{
    for (const auto& p : params) {
        if (!p.value.has_grad()) {
            throw ValueError("adam_step: parameter '" + p.name + "' has no gradient");
        }
    }
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i].value.numel(), 0.0f);
            state.v[i].assign(params[i].value.numel(), 0.0f);
        }
    }
    if (state.m.size() != params.size()) {
        throw ValueError("adam_step: optimizer state tracks " + std::to_string(state.m.size()) +
                         " parameters, got " + std::to_string(params.size()));
    }

    const AdamConfig& c = state.config;
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const float correction1 = static_cast<float>(1.0 - std::pow(static_cast<double>(c.beta1), t));
    const float correction2 = static_cast<float>(1.0 - std::pow(static_cast<double>(c.beta2), t));

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        auto value = p.value.mutable_data();
        auto grad = p.value.grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        if (m.size() != value.size()) {
            throw ValueError("adam_step: moment shape mismatch for '" + p.name + "'");
        }
        for (std::size_t j = 0; j < value.size(); ++j) {
            const float g = grad[j];
            m[j] = c.beta1 * m[j] + (1.0f - c.beta1) * g;
            v[j] = c.beta2 * v[j] + (1.0f - c.beta2) * g * g;
            const float m_hat = m[j] / correction1;
            const float v_hat = v[j] / correction2;
            value[j] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
        }
        p.value.clear_grad();
    }
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, std::uint64_t seed)
{
    if (fan_in == 0 || fan_out == 0) {
        throw ValueError("glorot_uniform: fans must be positive");
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Rng rng(seed);
    std::vector<float> data(element_count(shape));
    for (auto& x : data) {
        x = static_cast<float>(rng.uniform(-limit, limit));
    }
    return Tensor::from_data(std::move(shape), std::move(data), true);
}

} // namespace matforge::tensor
