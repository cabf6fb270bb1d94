#include "matforge/neural/loss.hpp"

#include "matforge/core/error.hpp"
#include "matforge/core/rng.hpp"
#include "matforge/tensor/optim.hpp"

#include <string>

namespace matforge::neural {

namespace {

void require_same_shape(const Tensor& y, const Tensor& y_true, const char* what)
{
    if (y.shape() != y_true.shape())
        throw ShapeError(std::string(what) + ": prediction " + tensor::shape_string(y.shape()) +
                         " and target " + tensor::shape_string(y_true.shape()) + " differ");
}

} // namespace

FeatureExtractor FeatureExtractor::seeded(std::uint64_t seed, std::vector<int> widths)
{
    FeatureExtractor fx;
    std::size_t in = 3;
    for (std::size_t k = 0; k < widths.size(); ++k) {
        const auto out = std::size_t(widths[k]);
        Tensor w = tensor::glorot_uniform({out, in, 3, 3}, in * 9, out * 9, derive_seed(seed, k));
        w.set_requires_grad(false);
        fx.stages_.push_back({w, Tensor::zeros({out})});
        in = out;
    }
    return fx;
}

FeatureExtractor FeatureExtractor::identity() { return {}; }

FeatureExtractor FeatureExtractor::from_records(const std::vector<tensor::NamedArray>& records)
{
    FeatureExtractor fx;
    std::size_t in = 3;
    for (std::size_t k = 0;; ++k) {
        const std::string p = "fx." + std::to_string(k);
        const tensor::NamedArray* w = nullptr;
        const tensor::NamedArray* b = nullptr;
        for (const auto& r : records) {
            if (r.name == p + ".weight")
                w = &r;
            if (r.name == p + ".bias")
                b = &r;
        }
        if (!w)
            break;
        if (w->shape.size() != 4 || w->shape[1] != in || w->shape[2] != 3 || w->shape[3] != 3)
            throw ShapeError(p + ".weight " + tensor::shape_string(w->shape) + " is not O x " + std::to_string(in) +
                             " x 3 x 3");
        const std::size_t out = w->shape[0];
        if (!b || b->shape != tensor::Shape{out})
            throw ShapeError(p + ".bias missing or not of length " + std::to_string(out));
        fx.stages_.push_back({Tensor::from_data(w->shape, w->data), Tensor::from_data(b->shape, b->data)});
        in = out;
    }
    if (fx.stages_.empty())
        throw ValueError("no fx.0.weight record in feature extractor weights");
    return fx;
}

Tensor FeatureExtractor::features(const Tensor& images) const
{
    Tensor h = images;
    for (const auto& s : stages_)
        h = tensor::relu(tensor::conv2d(h, s.weight, s.bias, 2, 1));
    return h;
}

Tensor l1_loss(const Tensor& y, const Tensor& y_true)
{
    require_same_shape(y, y_true, "l1_loss");
    return tensor::mean(tensor::abs(tensor::sub(y, y_true.detach())));
}

Tensor feature_loss(const Tensor& y, const Tensor& y_true, const FeatureExtractor& fx)
{
    require_same_shape(y, y_true, "feature_loss");
    Tensor target;
    {
        tensor::NoGradGuard no_grad;
        target = fx.features(y_true.detach());
    }
    // The mean over N x C x H x W is the batch average of the per-image
    // (1 / C H W) squared norm.
    return tensor::mean(tensor::square(tensor::sub(fx.features(y), target)));
}

LossTerms composite_loss(const Tensor& y, const Tensor& y_true, const FeatureExtractor& fx)
{
    const Tensor l1 = l1_loss(y, y_true);
    const Tensor feat = feature_loss(y, y_true, fx);
    return {tensor::add(l1, feat), double(l1.item()), double(feat.item())};
}

} // namespace matforge::neural
