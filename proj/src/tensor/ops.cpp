#include "matforge/tensor/ops.hpp"

#include "matforge/core/error.hpp"
#include "matforge/simd/kernels.hpp"
#include "matforge/simd/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace matforge::tensor {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<detail::Node<T>>;

// Float runs through the runtime-selected SIMD table; the widened double
// mode uses the scalar reference kernels.
template <typename T>
struct Kernels;

template <>
struct Kernels<float> {
    static void gemm(simd::Trans ta, simd::Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
                     const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta, float* c,
                     std::size_t ldc)
    {
        simd::kernels().gemm(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    }
    static void axpy(std::size_t n, float a, const float* x, float* y) { simd::kernels().axpy(n, a, x, y); }
    static void relu(std::size_t n, const float* x, float* y) { simd::kernels().relu(n, x, y); }
    static void relu_backward(std::size_t n, const float* x, const float* gy, float* gx)
    {
        simd::kernels().relu_backward(n, x, gy, gx);
    }
    static double sum(std::size_t n, const float* x) { return simd::kernels().sum(n, x); }
    static double dot(std::size_t n, const float* x, const float* y) { return simd::kernels().dot(n, x, y); }
    static void scale_shift(std::size_t n, float s, float b, const float* x, float* y)
    {
        simd::kernels().scale_shift(n, s, b, x, y);
    }
};

template <>
struct Kernels<double> {
    static void gemm(simd::Trans ta, simd::Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
                     const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta, double* c,
                     std::size_t ldc)
    {
        simd::ref::gemm<double>(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    }
    static void axpy(std::size_t n, double a, const double* x, double* y) { simd::ref::axpy(n, a, x, y); }
    static void relu(std::size_t n, const double* x, double* y) { simd::ref::relu(n, x, y); }
    static void relu_backward(std::size_t n, const double* x, const double* gy, double* gx)
    {
        simd::ref::relu_backward(n, x, gy, gx);
    }
    static double sum(std::size_t n, const double* x) { return simd::ref::sum(n, x); }
    static double dot(std::size_t n, const double* x, const double* y) { return simd::ref::dot(n, x, y); }
    static void scale_shift(std::size_t n, double s, double b, const double* x, double* y)
    {
        simd::ref::scale_shift(n, s, b, x, y);
    }
};

template <typename T>
NodePtr<T> new_node(Shape shape, std::vector<T> data)
{
    auto node = std::make_shared<detail::Node<T>>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    return node;
}

template <typename T>
bool tracks(std::initializer_list<const BasicTensor<T>*> inputs)
{
    if (!grad_enabled()) {
        return false;
    }
    for (const auto* t : inputs) {
        if (t->requires_grad()) {
            return true;
        }
    }
    return false;
}

// Grad buffer of a parent, allocated on first use; nullptr when the parent
// does not take gradients.
template <typename T>
T* grad_of(const NodePtr<T>& node)
{
    if (!node->requires_grad) {
        return nullptr;
    }
    if (node->grad.empty()) {
        node->grad.assign(node->data.size(), T(0));
    }
    return node->grad.data();
}

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op)
{
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
    }
}

template <typename T>
void require_defined(const BasicTensor<T>& t, const char* op, const char* what)
{
    if (!t.defined()) {
        throw ShapeError(std::string(op) + ": " + what + " is undefined");
    }
}

// Elementwise unary op with derivative expressed through (x, y).
template <typename T, typename Fwd, typename Deriv>
BasicTensor<T> unary(const BasicTensor<T>& x, Fwd fwd, Deriv deriv)
{
    require_defined(x, "unary", "input");
    std::vector<T> out(x.numel());
    const auto in = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = fwd(in[i]);
    }
    auto node = new_node<T>(x.shape(), std::move(out));
    if (tracks<T>({&x})) {
        node->requires_grad = true;
        node->parents = {x.node()};
        node->backward = [o = node.get(), xn = x.node(), deriv] {
            T* gx = grad_of(xn);
            for (std::size_t i = 0; i < o->grad.size(); ++i) {
                gx[i] += o->grad[i] * deriv(xn->data[i], o->data[i]);
            }
        };
    }
    return BasicTensor<T>(node);
}

// ---------------------------------------------------------------------------
// im2col / col2im for one sample

struct ConvGeometry {
    std::size_t channels, height, width;  // of the image being unfolded
    std::size_t kernel, stride, padding;
    std::size_t out_h, out_w;             // of the sliding-window grid
    std::size_t rows() const { return channels * kernel * kernel; }
    std::size_t cols() const { return out_h * out_w; }
};

template <typename T>
void im2col(const ConvGeometry& g, const T* image, T* col)
{
    const long pad = static_cast<long>(g.padding);
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ki = 0; ki < g.kernel; ++ki) {
            for (std::size_t kj = 0; kj < g.kernel; ++kj) {
                T* row = col + ((c * g.kernel + ki) * g.kernel + kj) * g.cols();
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const long iy = static_cast<long>(oy * g.stride + ki) - pad;
                    T* dst = row + oy * g.out_w;
                    if (iy < 0 || iy >= static_cast<long>(g.height)) {
                        std::fill(dst, dst + g.out_w, T(0));
                        continue;
                    }
                    const T* src = image + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const long ix = static_cast<long>(ox * g.stride + kj) - pad;
                        dst[ox] = (ix < 0 || ix >= static_cast<long>(g.width)) ? T(0) : src[ix];
                    }
                }
            }
        }
    }
}

// Adds the unfolded columns back into the image.
template <typename T>
void col2im(const ConvGeometry& g, const T* col, T* image)
{
    const long pad = static_cast<long>(g.padding);
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ki = 0; ki < g.kernel; ++ki) {
            for (std::size_t kj = 0; kj < g.kernel; ++kj) {
                const T* row = col + ((c * g.kernel + ki) * g.kernel + kj) * g.cols();
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const long iy = static_cast<long>(oy * g.stride + ki) - pad;
                    if (iy < 0 || iy >= static_cast<long>(g.height)) {
                        continue;
                    }
                    const T* src = row + oy * g.out_w;
                    T* dst = image + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const long ix = static_cast<long>(ox * g.stride + kj) - pad;
                        if (ix >= 0 && ix < static_cast<long>(g.width)) {
                            dst[ix] += src[ox];
                        }
                    }
                }
            }
        }
    }
}

// Views a rank-3 or rank-4 image tensor as N x C x H x W.
struct ImageDims {
    std::size_t n, c, h, w;
    bool batched;
};

template <typename T>
ImageDims image_dims(const BasicTensor<T>& x, const char* op)
{
    if (x.rank() == 4) {
        return {x.dim(0), x.dim(1), x.dim(2), x.dim(3), true};
    }
    if (x.rank() == 3) {
        return {1, x.dim(0), x.dim(1), x.dim(2), false};
    }
    throw ShapeError(std::string(op) + ": expected C x H x W or N x C x H x W input, got " +
                     shape_string(x.shape()));
}

template <typename T>
void add_bias(std::size_t channels, std::size_t plane, const T* bias, T* out)
{
    for (std::size_t c = 0; c < channels; ++c) {
        T* p = out + c * plane;
        const T b = bias[c];
        for (std::size_t i = 0; i < plane; ++i) {
            p[i] += b;
        }
    }
}

template <typename T>
void accumulate_bias_grad(std::size_t channels, std::size_t plane, const T* gy, T* gb)
{
    for (std::size_t c = 0; c < channels; ++c) {
        gb[c] += static_cast<T>(Kernels<T>::sum(plane, gy + c * plane));
    }
}

} // namespace

std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride, std::size_t padding)
{
    if (stride == 0) {
        throw ShapeError("conv2d: stride must be >= 1");
    }
    if (kernel == 0 || kernel > input + 2 * padding) {
        throw ShapeError("conv2d: kernel " + std::to_string(kernel) + " exceeds padded input extent " +
                         std::to_string(input + 2 * padding));
    }
    return (input + 2 * padding - kernel) / stride + 1;
}

std::size_t conv_transpose_output_extent(std::size_t input, std::size_t kernel, std::size_t stride,
                                         std::size_t padding)
{
    if (stride == 0) {
        throw ShapeError("conv2d_transpose: stride must be >= 1");
    }
    const long extent = static_cast<long>((input - 1) * stride + kernel) - 2 * static_cast<long>(padding);
    if (input == 0 || kernel == 0 || extent <= 0) {
        throw ShapeError("conv2d_transpose: output extent would be non-positive");
    }
    return static_cast<std::size_t>(extent);
}

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b)
{
    require_same_shape(a, b, "add");
    std::vector<T> out(a.data().begin(), a.data().end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += b.data()[i];
    }
    auto node = new_node<T>(a.shape(), std::move(out));
    if (tracks<T>({&a, &b})) {
        node->requires_grad = true;
        node->parents = {a.node(), b.node()};
        node->backward = [o = node.get(), an = a.node(), bn = b.node()] {
            const std::size_t n = o->grad.size();
            if (T* ga = grad_of(an)) {
                Kernels<T>::axpy(n, T(1), o->grad.data(), ga);
            }
            if (T* gb = grad_of(bn)) {
                Kernels<T>::axpy(n, T(1), o->grad.data(), gb);
            }
        };
    }
    return BasicTensor<T>(node);
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b)
{
    require_same_shape(a, b, "sub");
    std::vector<T> out(a.data().begin(), a.data().end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= b.data()[i];
    }
    auto node = new_node<T>(a.shape(), std::move(out));
    if (tracks<T>({&a, &b})) {
        node->requires_grad = true;
        node->parents = {a.node(), b.node()};
        node->backward = [o = node.get(), an = a.node(), bn = b.node()] {
            const std::size_t n = o->grad.size();
            if (T* ga = grad_of(an)) {
                Kernels<T>::axpy(n, T(1), o->grad.data(), ga);
            }
            if (T* gb = grad_of(bn)) {
                Kernels<T>::axpy(n, T(-1), o->grad.data(), gb);
            }
        };
    }
    return BasicTensor<T>(node);
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b)
{
    require_same_shape(a, b, "mul");
    std::vector<T> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.data()[i] * b.data()[i];
    }
    auto node = new_node<T>(a.shape(), std::move(out));
    if (tracks<T>({&a, &b})) {
        node->requires_grad = true;
        node->parents = {a.node(), b.node()};
        node->backward = [o = node.get(), an = a.node(), bn = b.node()] {
            const std::size_t n = o->grad.size();
            if (T* ga = grad_of(an)) {
                for (std::size_t i = 0; i < n; ++i) {
                    ga[i] += o->grad[i] * bn->data[i];
                }
            }
            if (T* gb = grad_of(bn)) {
                for (std::size_t i = 0; i < n; ++i) {
                    gb[i] += o->grad[i] * an->data[i];
                }
            }
        };
    }
    return BasicTensor<T>(node);
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& x, T factor)
{
    return unary(
        x, [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x)
{
    require_defined(x, "relu", "input");
    std::vector<T> out(x.numel());
    Kernels<T>::relu(out.size(), x.data().data(), out.data());
    auto node = new_node<T>(x.shape(), std::move(out));
    if (tracks<T>({&x})) {
        node->requires_grad = true;
        node->parents = {x.node()};
        node->backward = [o = node.get(), xn = x.node()] {
            Kernels<T>::relu_backward(o->grad.size(), xn->data.data(), o->grad.data(), grad_of(xn));
        };
    }
    return BasicTensor<T>(node);
}

template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& x)
{
    return unary(
        x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x)
{
    static constexpr T lo = std::numeric_limits<T>::epsilon();
    static constexpr T hi = T(1) - std::numeric_limits<T>::epsilon() / 2;
    return unary(
        x,
        [](T v) {
            const T y = v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
            return std::clamp(y, lo, hi);
        },
        [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
BasicTensor<T> abs(const BasicTensor<T>& x)
{
    return unary(
        x, [](T v) { return std::abs(v); }, [](T v, T) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); });
}

template <typename T>
BasicTensor<T> square(const BasicTensor<T>& x)
{
    return unary(
        x, [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

// ---------------------------------------------------------------------------
// Reductions and views

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& x)
{
    require_defined(x, "sum", "input");
    const T total = static_cast<T>(Kernels<T>::sum(x.numel(), x.data().data()));
    auto node = new_node<T>(Shape{1}, std::vector<T>{total});
    if (tracks<T>({&x})) {
        node->requires_grad = true;
        node->parents = {x.node()};
        node->backward = [o = node.get(), xn = x.node()] {
            T* gx = grad_of(xn);
            const T g = o->grad[0];
            for (std::size_t i = 0; i < xn->data.size(); ++i) {
                gx[i] += g;
            }
        };
    }
    return BasicTensor<T>(node);
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& x)
{
    require_defined(x, "mean", "input");
    return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape)
{
    require_defined(x, "reshape", "input");
    if (element_count(shape) != x.numel()) {
        throw ShapeError("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
    }
    auto node = new_node<T>(std::move(shape), std::vector<T>(x.data().begin(), x.data().end()));
    if (tracks<T>({&x})) {
        node->requires_grad = true;
        node->parents = {x.node()};
        node->backward = [o = node.get(), xn = x.node()] {
            Kernels<T>::axpy(o->grad.size(), T(1), o->grad.data(), grad_of(xn));
        };
    }
    return BasicTensor<T>(node);
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b)
{
    require_defined(a, "concat_channels", "first input");
    require_defined(b, "concat_channels", "second input");
    if (a.rank() != 4 || b.rank() != 4 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
        throw ShapeError("concat_channels: incompatible shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
    }
    const std::size_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1), plane = a.dim(2) * a.dim(3);
    std::vector<T> out(n * (ca + cb) * plane);
    for (std::size_t s = 0; s < n; ++s) {
        std::copy_n(a.data().data() + s * ca * plane, ca * plane, out.data() + s * (ca + cb) * plane);
        std::copy_n(b.data().data() + s * cb * plane, cb * plane, out.data() + (s * (ca + cb) + ca) * plane);
    }
    auto node = new_node<T>(Shape{n, ca + cb, a.dim(2), a.dim(3)}, std::move(out));
    if (tracks<T>({&a, &b})) {
        node->requires_grad = true;
        node->parents = {a.node(), b.node()};
        node->backward = [o = node.get(), an = a.node(), bn = b.node(), n, ca, cb, plane] {
            T* ga = grad_of(an);
            T* gb = grad_of(bn);
            for (std::size_t s = 0; s < n; ++s) {
                const T* g = o->grad.data() + s * (ca + cb) * plane;
                if (ga) {
                    Kernels<T>::axpy(ca * plane, T(1), g, ga + s * ca * plane);
                }
                if (gb) {
                    Kernels<T>::axpy(cb * plane, T(1), g + ca * plane, gb + s * cb * plane);
                }
            }
        };
    }
    return BasicTensor<T>(node);
}

template <typename T>
BasicTensor<T> replicate_channels(const BasicTensor<T>& x, std::size_t copies)
{
    require_defined(x, "replicate_channels", "input");
    if (x.rank() != 4 || x.dim(1) != 1 || copies == 0) {
        throw ShapeError("replicate_channels: expected N x 1 x H x W input, got " + shape_string(x.shape()));
    }
    const std::size_t n = x.dim(0), plane = x.dim(2) * x.dim(3);
    std::vector<T> out(n * copies * plane);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t c = 0; c < copies; ++c) {
            std::copy_n(x.data().data() + s * plane, plane, out.data() + (s * copies + c) * plane);
        }
    }
    auto node = new_node<T>(Shape{n, copies, x.dim(2), x.dim(3)}, std::move(out));
    if (tracks<T>({&x})) {
        node->requires_grad = true;
        node->parents = {x.node()};
        node->backward = [o = node.get(), xn = x.node(), n, copies, plane] {
            T* gx = grad_of(xn);
            for (std::size_t s = 0; s < n; ++s) {
                for (std::size_t c = 0; c < copies; ++c) {
                    Kernels<T>::axpy(plane, T(1), o->grad.data() + (s * copies + c) * plane, gx + s * plane);
                }
            }
        };
    }
    return BasicTensor<T>(node);
}

// ---------------------------------------------------------------------------
// Dense layers

template <typename T>
BasicTensor<T> fully_connected(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias)
{
    require_defined(x, "fully_connected", "input");
    require_defined(weight, "fully_connected", "weight");
    require_defined(bias, "fully_connected", "bias");
    if (weight.rank() != 2) {
        throw ShapeError("fully_connected: weight must be Out x In, got " + shape_string(weight.shape()));
    }
    const std::size_t out_f = weight.dim(0), in_f = weight.dim(1);
    const bool batched = x.rank() == 2;
    if (!(batched || x.rank() == 1) || x.shape().back() != in_f) {
        throw ShapeError("fully_connected: input " + shape_string(x.shape()) + " does not match weight " +
                         shape_string(weight.shape()));
    }
    if (bias.rank() != 1 || bias.dim(0) != out_f) {
        throw ShapeError("fully_connected: bias " + shape_string(bias.shape()) + " does not match " +
                         std::to_string(out_f) + " outputs");
    }
    const std::size_t n = batched ? x.dim(0) : 1;
    std::vector<T> out(n * out_f);
    for (std::size_t s = 0; s < n; ++s) {
        std::copy_n(bias.data().data(), out_f, out.data() + s * out_f);
    }
    Kernels<T>::gemm(simd::Trans::No, simd::Trans::Yes, n, out_f, in_f, T(1), x.data().data(), in_f,
                     weight.data().data(), in_f, T(1), out.data(), out_f);
    auto node = new_node<T>(batched ? Shape{n, out_f} : Shape{out_f}, std::move(out));
    if (tracks<T>({&x, &weight, &bias})) {
        node->requires_grad = true;
        node->parents = {x.node(), weight.node(), bias.node()};
        node->backward = [o = node.get(), xn = x.node(), wn = weight.node(), bn = bias.node(), n, in_f, out_f] {
            const T* gy = o->grad.data();
            if (T* gx = grad_of(xn)) {
                Kernels<T>::gemm(simd::Trans::No, simd::Trans::No, n, in_f, out_f, T(1), gy, out_f, wn->data.data(),
                                 in_f, T(1), gx, in_f);
            }
            if (T* gw = grad_of(wn)) {
                Kernels<T>::gemm(simd::Trans::Yes, simd::Trans::No, out_f, in_f, n, T(1), gy, out_f,
                                 xn->data.data(), in_f, T(1), gw, in_f);
            }
            if (T* gb = grad_of(bn)) {
                for (std::size_t s = 0; s < n; ++s) {
                    Kernels<T>::axpy(out_f, T(1), gy + s * out_f, gb);
                }
            }
        };
    }
    return BasicTensor<T>(node);
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias,
                      std::size_t stride, std::size_t padding)
{
    require_defined(x, "conv2d", "input");
    require_defined(weight, "conv2d", "weight");
    require_defined(bias, "conv2d", "bias");
    const ImageDims d = image_dims(x, "conv2d");
    if (weight.rank() != 4 || weight.dim(2) != weight.dim(3)) {
        throw ShapeError("conv2d: weight must be O x C x K x K, got " + shape_string(weight.shape()));
    }
    if (weight.dim(1) != d.c) {
        throw ShapeError("conv2d: weight expects " + std::to_string(weight.dim(1)) + " input channels, input has " +
                         std::to_string(d.c));
    }
    const std::size_t oc = weight.dim(0), k = weight.dim(2);
    if (bias.rank() != 1 || bias.dim(0) != oc) {
        throw ShapeError("conv2d: bias " + shape_string(bias.shape()) + " does not match " + std::to_string(oc) +
                         " output channels");
    }
    const ConvGeometry g{d.c, d.h, d.w, k, stride, padding, conv_output_extent(d.h, k, stride, padding),
                         conv_output_extent(d.w, k, stride, padding)};
    const std::size_t in_plane = d.c * d.h * d.w, out_plane = oc * g.cols();
    std::vector<T> out(d.n * out_plane);
    std::vector<T> col(g.rows() * g.cols());
    for (std::size_t s = 0; s < d.n; ++s) {
        im2col(g, x.data().data() + s * in_plane, col.data());
        T* y = out.data() + s * out_plane;
        Kernels<T>::gemm(simd::Trans::No, simd::Trans::No, oc, g.cols(), g.rows(), T(1), weight.data().data(),
                         g.rows(), col.data(), g.cols(), T(0), y, g.cols());
        add_bias(oc, g.cols(), bias.data().data(), y);
    }
    Shape shape = d.batched ? Shape{d.n, oc, g.out_h, g.out_w} : Shape{oc, g.out_h, g.out_w};
    auto node = new_node<T>(std::move(shape), std::move(out));
    if (tracks<T>({&x, &weight, &bias})) {
        node->requires_grad = true;
        node->parents = {x.node(), weight.node(), bias.node()};
        node->backward = [o = node.get(), xn = x.node(), wn = weight.node(), bn = bias.node(), g, d, oc, in_plane,
                          out_plane] {
            T* gx = grad_of(xn);
            T* gw = grad_of(wn);
            T* gb = grad_of(bn);
            std::vector<T> col(g.rows() * g.cols());
            for (std::size_t s = 0; s < d.n; ++s) {
                const T* gy = o->grad.data() + s * out_plane;
                if (gw) {
                    im2col(g, xn->data.data() + s * in_plane, col.data());
                    Kernels<T>::gemm(simd::Trans::No, simd::Trans::Yes, oc, g.rows(), g.cols(), T(1), gy, g.cols(),
                                     col.data(), g.cols(), T(1), gw, g.rows());
                }
                if (gb) {
                    accumulate_bias_grad(oc, g.cols(), gy, gb);
                }
                if (gx) {
                    Kernels<T>::gemm(simd::Trans::Yes, simd::Trans::No, g.rows(), g.cols(), oc, T(1),
                                     wn->data.data(), g.rows(), gy, g.cols(), T(0), col.data(), g.cols());
                    col2im(g, col.data(), gx + s * in_plane);
                }
            }
        };
    }
    return BasicTensor<T>(node);
}

template <typename T>
BasicTensor<T> conv2d_transpose(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias,
                                std::size_t stride, std::size_t padding)
{
    require_defined(x, "conv2d_transpose", "input");
    require_defined(weight, "conv2d_transpose", "weight");
    require_defined(bias, "conv2d_transpose", "bias");
    const ImageDims d = image_dims(x, "conv2d_transpose");
    if (weight.rank() != 4 || weight.dim(2) != weight.dim(3)) {
        throw ShapeError("conv2d_transpose: weight must be C_in x C_out x K x K, got " +
                         shape_string(weight.shape()));
    }
    if (weight.dim(0) != d.c) {
        throw ShapeError("conv2d_transpose: weight expects " + std::to_string(weight.dim(0)) +
                         " input channels, input has " + std::to_string(d.c));
    }
    const std::size_t oc = weight.dim(1), k = weight.dim(2);
    if (bias.rank() != 1 || bias.dim(0) != oc) {
        throw ShapeError("conv2d_transpose: bias " + shape_string(bias.shape()) + " does not match " +
                         std::to_string(oc) + " output channels");
    }
    const std::size_t oh = conv_transpose_output_extent(d.h, k, stride, padding);
    const std::size_t ow = conv_transpose_output_extent(d.w, k, stride, padding);
    // Geometry of the equivalent forward convolution over the output image.
    const ConvGeometry g{oc, oh, ow, k, stride, padding, d.h, d.w};
    if (conv_output_extent(oh, k, stride, padding) != d.h || conv_output_extent(ow, k, stride, padding) != d.w) {
        throw ShapeError("conv2d_transpose: inconsistent stride/padding for input " + shape_string(x.shape()));
    }
    const std::size_t in_plane = d.c * d.h * d.w, out_plane = oc * oh * ow;
    std::vector<T> out(d.n * out_plane, T(0));
    std::vector<T> col(g.rows() * g.cols());
    for (std::size_t s = 0; s < d.n; ++s) {
        Kernels<T>::gemm(simd::Trans::Yes, simd::Trans::No, g.rows(), g.cols(), d.c, T(1), weight.data().data(),
                         g.rows(), x.data().data() + s * in_plane, g.cols(), T(0), col.data(), g.cols());
        T* y = out.data() + s * out_plane;
        col2im(g, col.data(), y);
        add_bias(oc, oh * ow, bias.data().data(), y);
    }
    Shape shape = d.batched ? Shape{d.n, oc, oh, ow} : Shape{oc, oh, ow};
    auto node = new_node<T>(std::move(shape), std::move(out));
    if (tracks<T>({&x, &weight, &bias})) {
        node->requires_grad = true;
        node->parents = {x.node(), weight.node(), bias.node()};
        node->backward = [o = node.get(), xn = x.node(), wn = weight.node(), bn = bias.node(), g, d, oc, in_plane,
                          out_plane] {
            T* gx = grad_of(xn);
            T* gw = grad_of(wn);
            T* gb = grad_of(bn);
            std::vector<T> col(g.rows() * g.cols());
            for (std::size_t s = 0; s < d.n; ++s) {
                const T* gy = o->grad.data() + s * out_plane;
                if (gb) {
                    accumulate_bias_grad(oc, g.height * g.width, gy, gb);
                }
                if (!gx && !gw) {
                    continue;
                }
                im2col(g, gy, col.data());
                if (gx) {
                    Kernels<T>::gemm(simd::Trans::No, simd::Trans::No, d.c, g.cols(), g.rows(), T(1),
                                     wn->data.data(), g.rows(), col.data(), g.cols(), T(1), gx + s * in_plane,
                                     g.cols());
                }
                if (gw) {
                    Kernels<T>::gemm(simd::Trans::No, simd::Trans::Yes, d.c, g.rows(), g.cols(), T(1),
                                     xn->data.data() + s * in_plane, g.cols(), col.data(), g.cols(), T(1), gw,
                                     g.rows());
                }
            }
        };
    }
    return BasicTensor<T>(node);
}

// ---------------------------------------------------------------------------
// Batch normalization

template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma, const BasicTensor<T>& beta,
                          BatchNormStats<T>& stats, NormMode mode, T momentum, T epsilon)
{
    require_defined(x, "batch_norm", "input");
    if (x.rank() != 2 && x.rank() != 4) {
        throw ShapeError("batch_norm: expected N x C or N x C x H x W input, got " + shape_string(x.shape()));
    }
    const std::size_t n = x.dim(0), channels = x.dim(1);
    const std::size_t plane = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
    if (gamma.numel() != channels || beta.numel() != channels || stats.mean.size() != channels ||
        stats.var.size() != channels) {
        throw ShapeError("batch_norm: parameters do not match " + std::to_string(channels) + " channels");
    }
    if (mode == NormMode::Train && n < 2) {
        throw ShapeError("batch_norm: train mode needs a batch of at least 2 samples, got " + std::to_string(n));
    }
    const std::size_t count = n * plane;
    std::vector<T> out(x.numel());
    std::vector<T> inv_std(channels);
    std::vector<T> mu(channels);
    const T* in = x.data().data();

    for (std::size_t c = 0; c < channels; ++c) {
        if (mode == NormMode::Train) {
            double s = 0.0;
            for (std::size_t b = 0; b < n; ++b) {
                s += Kernels<T>::sum(plane, in + (b * channels + c) * plane);
            }
            const double m = s / static_cast<double>(count);
            double ss = 0.0;
            for (std::size_t b = 0; b < n; ++b) {
                const T* p = in + (b * channels + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const double dv = p[i] - m;
                    ss += dv * dv;
                }
            }
            const double var = ss / static_cast<double>(count);
            mu[c] = static_cast<T>(m);
            inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(epsilon)));
            const double unbiased = ss / static_cast<double>(count - 1);
            stats.mean[c] = static_cast<T>((1.0 - momentum) * stats.mean[c] + momentum * m);
            stats.var[c] = static_cast<T>((1.0 - momentum) * stats.var[c] + momentum * unbiased);
        } else {
            mu[c] = stats.mean[c];
            inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(stats.var[c]) + epsilon));
        }
        // Centre first: folding the mean into the shift loses precision when
        // the variance is tiny relative to the mean.
        const T sc = gamma.data()[c] * inv_std[c];
        for (std::size_t b = 0; b < n; ++b) {
            const std::size_t off = (b * channels + c) * plane;
            T* y = out.data() + off;
            for (std::size_t i = 0; i < plane; ++i) {
                y[i] = in[off + i] - mu[c];
            }
            Kernels<T>::scale_shift(plane, sc, beta.data()[c], y, y);
        }
    }

    auto node = new_node<T>(x.shape(), std::move(out));
    if (tracks<T>({&x, &gamma, &beta})) {
        node->requires_grad = true;
        node->parents = {x.node(), gamma.node(), beta.node()};
        node->backward = [o = node.get(), xn = x.node(), gn = gamma.node(), bn = beta.node(), mu, inv_std, mode, n,
                          channels, plane, count] {
            T* gx = grad_of(xn);
            T* gg = grad_of(gn);
            T* gb = grad_of(bn);
            for (std::size_t c = 0; c < channels; ++c) {
                // sum(dy) and sum(dy * xhat) over the channel.
                double sdy = 0.0, sdyx = 0.0;
                for (std::size_t b = 0; b < n; ++b) {
                    const std::size_t off = (b * channels + c) * plane;
                    const T* dy = o->grad.data() + off;
                    const T* xv = xn->data.data() + off;
                    for (std::size_t i = 0; i < plane; ++i) {
                        sdy += dy[i];
                        sdyx += static_cast<double>(dy[i]) * (xv[i] - mu[c]) * inv_std[c];
                    }
                }
                if (gg) {
                    gg[c] += static_cast<T>(sdyx);
                }
                if (gb) {
                    gb[c] += static_cast<T>(sdy);
                }
                if (!gx) {
                    continue;
                }
                const T g = gn->data[c];
                if (mode == NormMode::Eval) {
                    for (std::size_t b = 0; b < n; ++b) {
                        const std::size_t off = (b * channels + c) * plane;
                        Kernels<T>::axpy(plane, g * inv_std[c], o->grad.data() + off, gx + off);
                    }
                    continue;
                }
                const double mean_dy = sdy / static_cast<double>(count);
                const double mean_dyx = sdyx / static_cast<double>(count);
                const double k = static_cast<double>(g) * inv_std[c];
                for (std::size_t b = 0; b < n; ++b) {
                    const std::size_t off = (b * channels + c) * plane;
                    const T* dy = o->grad.data() + off;
                    const T* xv = xn->data.data() + off;
                    T* dx = gx + off;
                    for (std::size_t i = 0; i < plane; ++i) {
                        const double xhat = (xv[i] - mu[c]) * static_cast<double>(inv_std[c]);
                        dx[i] += static_cast<T>(k * (dy[i] - mean_dy - xhat * mean_dyx));
                    }
                }
            }
        };
    }
    return BasicTensor<T>(node);
}

// ---------------------------------------------------------------------------

#define MATFORGE_INSTANTIATE_OPS(T)                                                                                 \
    template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                                   \
    template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                                   \
    template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                                   \
    template BasicTensor<T> scale(const BasicTensor<T>&, T);                                                     \
    template BasicTensor<T> relu(const BasicTensor<T>&);                                                         \
    template BasicTensor<T> tanh(const BasicTensor<T>&);                                                         \
    template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                                      \
    template BasicTensor<T> abs(const BasicTensor<T>&);                                                          \
    template BasicTensor<T> square(const BasicTensor<T>&);                                                       \
    template BasicTensor<T> sum(const BasicTensor<T>&);                                                          \
    template BasicTensor<T> mean(const BasicTensor<T>&);                                                         \
    template BasicTensor<T> reshape(const BasicTensor<T>&, Shape);                                               \
    template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);                       \
    template BasicTensor<T> replicate_channels(const BasicTensor<T>&, std::size_t);                              \
    template BasicTensor<T> fully_connected(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&); \
    template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,           \
                                   std::size_t, std::size_t);                                                    \
    template BasicTensor<T> conv2d_transpose(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, \
                                             std::size_t, std::size_t);                                          \
    template BasicTensor<T> batch_norm(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,       \
                                       BatchNormStats<T>&, NormMode, T, T);

MATFORGE_INSTANTIATE_OPS(float)
MATFORGE_INSTANTIATE_OPS(double)

#undef MATFORGE_INSTANTIATE_OPS

} // namespace matforge::tensor
