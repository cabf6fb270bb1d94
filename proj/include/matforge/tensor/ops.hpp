#pragma once

// Differentiable operations. Image tensors are N x C x H x W; convolution
// also accepts unbatched C x H x W and returns the matching rank.

#include "matforge/tensor/tensor.hpp"

#include <cstddef>
#include <vector>

namespace matforge::tensor {

template <typename T> BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> scale(const BasicTensor<T>& x, T factor);

template <typename T> BasicTensor<T> relu(const BasicTensor<T>& x);
template <typename T> BasicTensor<T> tanh(const BasicTensor<T>& x);
// Output clamped to the open interval (0, 1) in the working precision.
template <typename T> BasicTensor<T> sigmoid(const BasicTensor<T>& x);
template <typename T> BasicTensor<T> abs(const BasicTensor<T>& x);
template <typename T> BasicTensor<T> square(const BasicTensor<T>& x);

template <typename T> BasicTensor<T> sum(const BasicTensor<T>& x);
template <typename T> BasicTensor<T> mean(const BasicTensor<T>& x);

template <typename T> BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape);

// Concatenation along dim 1 of two rank-4 tensors with equal N, H, W.
template <typename T> BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);

// N x 1 x H x W -> N x copies x H x W, every channel identical.
template <typename T> BasicTensor<T> replicate_channels(const BasicTensor<T>& x, std::size_t copies);

// y = x W^T + b. x is N x In (or a single In vector), W is Out x In, b is Out.
template <typename T>
BasicTensor<T> fully_connected(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias);

// Cross-correlation. weight is O x C x K x K, bias O.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias,
                      std::size_t stride, std::size_t padding);

// Adjoint of conv2d with respect to its input. weight is C_in x C_out x K x K,
// bias C_out; output extent (H - 1) * stride - 2 * padding + K.
template <typename T>
BasicTensor<T> conv2d_transpose(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias,
                                std::size_t stride, std::size_t padding);

enum class NormMode { Train, Eval };

template <typename T>
struct BatchNormStats {
    std::vector<T> mean;
    std::vector<T> var;

    static BatchNormStats identity(std::size_t channels)
    {
        return {std::vector<T>(channels, T(0)), std::vector<T>(channels, T(1))};
    }
};

// Per-channel normalization of N x C (x H x W) input. Train mode normalizes
// with the biased batch variance and folds the unbiased variance into the
// running stats with the given momentum; it needs at least two samples.
// Eval mode reads the running stats only.
template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma, const BasicTensor<T>& beta,
                          BatchNormStats<T>& stats, NormMode mode, T momentum = T(0.1), T epsilon = T(1e-5));

// Output extent of a strided convolution; throws ShapeError if not positive.
std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride, std::size_t padding);
std::size_t conv_transpose_output_extent(std::size_t input, std::size_t kernel, std::size_t stride,
                                         std::size_t padding);

} // namespace matforge::tensor
