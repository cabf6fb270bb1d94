#pragma once

// Central finite differences (h = 1e-3) in double precision for every layer
// type. Shared by the unit tests and the acceptance suite.

#include "matforge/core/error.hpp"
#include "matforge/tensor/ops.hpp"

#include "support/oracles.hpp"

#include <functional>
#include <string>
#include <vector>

namespace matforge::testing {

using GradForward = std::function<tensor::Tensor64(const std::vector<tensor::Tensor64>&)>;

// Projects the op output onto fixed random weights so every output element
// contributes a distinct, nonzero sensitivity.
inline double check_gradients(std::vector<tensor::Tensor64> inputs, const GradForward& forward, std::uint64_t seed)
{
    using namespace tensor;
    Rng rng(seed);
    Tensor64 probe;
    auto loss_of = [&](const std::vector<Tensor64>& in) {
        const auto out = forward(in);
        if (!probe.defined()) {
            probe = random_tensor<double>(out.shape(), rng);
        }
        return sum(mul(out, probe));
    };
    const auto loss = loss_of(inputs);
    backward(loss);
    double worst = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!inputs[i].requires_grad()) {
            continue;
        }
        const std::vector<double> analytic(inputs[i].grad().begin(), inputs[i].grad().end());
        const auto numeric = numeric_gradient(inputs, i, [&] {
            NoGradGuard guard;
            return loss_of(inputs).item();
        });
        worst = std::max(worst, relative_error(analytic, numeric));
    }
    return worst;
}

// Keeps inputs away from a kink (relu/abs) by more than the FD step.
inline tensor::Tensor64 away_from_zero(tensor::Tensor64 t)
{
    for (auto& v : t.mutable_data()) {
        if (std::abs(v) < 0.05) {
            v = v < 0 ? -0.05 - std::abs(v) : 0.05 + v;
        }
    }
    return t;
}

inline const std::vector<std::string>& gradient_layers()
{
    static const std::vector<std::string> names{
        "conv2d",  "conv2d_transpose", "batch_norm_train", "batch_norm_eval", "fully_connected",
        "relu",    "tanh",             "sigmoid",          "abs",             "square",
        "concat",  "replicate",        "reshape",          "mul",             "l1_plus_mse"};
    return names;
}

// Instance i of a layer check: random shapes, strides and padding vary with i.
inline double gradient_instance(const std::string& layer, int i)
{
    using namespace tensor;
    using T = std::vector<Tensor64>;
    Rng rng(1000 * (1 + i) + std::hash<std::string>{}(layer) % 997);
    const std::uint64_t probe = 50000 + i;
    if (layer == "conv2d") {
        const std::size_t stride = 1 + i % 2, pad = i % 3 == 0 ? 0 : 1, k = 2 + i % 2;
        T in{random_tensor<double>({2, 2, 5, 5}, rng, true), random_tensor<double>({3, 2, k, k}, rng, true),
             random_tensor<double>({3}, rng, true)};
        return check_gradients(in, [&](const T& t) { return conv2d(t[0], t[1], t[2], stride, pad); }, probe);
    }
    if (layer == "conv2d_transpose") {
        const std::size_t stride = 1 + i % 2, pad = i % 2, k = 3 + i % 2;
        T in{random_tensor<double>({2, 2, 3, 3}, rng, true), random_tensor<double>({2, 3, k, k}, rng, true),
             random_tensor<double>({3}, rng, true)};
        return check_gradients(
            in, [&](const T& t) { return conv2d_transpose(t[0], t[1], t[2], stride, pad); }, probe);
    }
    if (layer == "batch_norm_train") {
        T in{random_tensor<double>({3, 2, 3, 3}, rng, true, -2.0, 2.0), random_tensor<double>({2}, rng, true, 0.5, 1.5),
             random_tensor<double>({2}, rng, true)};
        return check_gradients(
            in,
            [](const T& t) {
                auto stats = BatchNormStats<double>::identity(2);
                return batch_norm(t[0], t[1], t[2], stats, NormMode::Train);
            },
            probe);
    }
    if (layer == "batch_norm_eval") {
        T in{random_tensor<double>({2, 3, 2, 2}, rng, true), random_tensor<double>({3}, rng, true),
             random_tensor<double>({3}, rng, true)};
        BatchNormStats<double> stats{{0.1, -0.3, 0.2}, {0.7, 1.2, 2.5}};
        return check_gradients(
            in, [&](const T& t) { return batch_norm(t[0], t[1], t[2], stats, NormMode::Eval); }, probe);
    }
    if (layer == "fully_connected") {
        T in{random_tensor<double>({3, 4}, rng, true), random_tensor<double>({5, 4}, rng, true),
             random_tensor<double>({5}, rng, true)};
        return check_gradients(in, [](const T& t) { return fully_connected(t[0], t[1], t[2]); }, probe);
    }
    if (layer == "relu" || layer == "tanh" || layer == "sigmoid" || layer == "abs" || layer == "square") {
        T in{away_from_zero(random_tensor<double>({2, 3, 4}, rng, true, -3.0, 3.0))};
        in[0].set_requires_grad(true);
        return check_gradients(
            in,
            [&](const T& t) {
                if (layer == "relu")
                    return relu(t[0]);
                if (layer == "tanh")
                    return tanh(t[0]);
                if (layer == "sigmoid")
                    return sigmoid(t[0]);
                if (layer == "abs")
                    return abs(t[0]);
                return square(t[0]);
            },
            probe);
    }
    T in{random_tensor<double>({2, 2, 3, 3}, rng, true), random_tensor<double>({2, 1, 3, 3}, rng, true)};
    if (layer == "concat")
        return check_gradients(in, [](const T& t) { return concat_channels(t[0], t[1]); }, probe);
    if (layer == "replicate")
        return check_gradients(in, [](const T& t) { return replicate_channels(t[1], 4); }, probe);
    if (layer == "reshape")
        return check_gradients(in, [](const T& t) { return reshape(t[1], {2, 9}); }, probe);
    if (layer == "mul")
        return check_gradients(in, [](const T& t) { return mul(t[0], t[0]); }, probe);
    if (layer == "l1_plus_mse") {
        auto a = random_tensor<double>({2, 3, 4, 4}, rng, true);
        const auto delta = away_from_zero(random_tensor<double>({2, 3, 4, 4}, rng));
        std::vector<double> b(a.numel());
        for (std::size_t j = 0; j < b.size(); ++j) {
            b[j] = a.data()[j] - delta.data()[j];
        }
        // mean |a - b| + mean (a - b)^2, the two composite-loss terms.
        T pair{a, Tensor64::from_data({2, 3, 4, 4}, b)};
        return check_gradients(
            pair,
            [](const T& t) {
                const auto d = sub(t[0], t[1]);
                return reshape(add(mean(abs(d)), mean(square(d))), {1});
            },
            probe);
    }
    throw ValueError("unknown layer " + layer);
}

inline double worst_gradient_error(const std::string& layer, int instances)
{
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
        worst = std::max(worst, gradient_instance(layer, i));
    }
    return worst;
}

} // namespace matforge::testing
