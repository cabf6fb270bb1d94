#pragma once

// Composite training loss: mean absolute error plus a feature
// reconstruction term (1 / C H W) ||phi(y) - phi(y_true)||^2 averaged over
// the batch.

#include "matforge/tensor/ops.hpp"
#include "matforge/tensor/parameter.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace matforge::neural {

using tensor::Tensor;

// Frozen convolutional stack phi. The default is three stride-2 3x3 conv
// stages with ReLU and seeded Glorot weights; the loss reads the last one.
// identity() is a test hook whose phi is the input itself.
class FeatureExtractor {
public:
    static FeatureExtractor seeded(std::uint64_t seed, std::vector<int> widths = {16, 32, 64});
    static FeatureExtractor identity();
    // Records fx.<k>.weight (O x C x 3 x 3) and fx.<k>.bias from a
    // checkpoint; stage k reads the channels stage k-1 wrote, starting at 3.
    static FeatureExtractor from_records(const std::vector<tensor::NamedArray>& records);

    // N x 3 x H x W -> N x C_j x H_j x W_j. Gradients flow to `images` only.
    Tensor features(const Tensor& images) const;
    bool is_identity() const { return stages_.empty(); }
    std::size_t stage_count() const { return stages_.size(); }

private:
    struct Stage {
        Tensor weight;
        Tensor bias;
    };
    std::vector<Stage> stages_;
};

struct LossTerms {
    Tensor total;  // differentiable
    double l1 = 0.0;
    double feature = 0.0;
};

Tensor l1_loss(const Tensor& y, const Tensor& y_true);
Tensor feature_loss(const Tensor& y, const Tensor& y_true, const FeatureExtractor& fx);
LossTerms composite_loss(const Tensor& y, const Tensor& y_true, const FeatureExtractor& fx);

} // namespace matforge::neural
