#pragma once

// Scalar reference kernels. Templated so the tensor engine's widened
// (double) mode runs the same code paths as the float scalar table.

#include "matforge/simd/kernels.hpp"

#include <cmath>
#include <cstddef>

namespace matforge::simd::ref {

template <typename T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a, std::size_t lda,
          const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc)
{
    for (std::size_t i = 0; i < m; ++i) {
        T* crow = c + i * ldc;
        if (beta == T(0)) {
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] = T(0);
            }
        } else if (beta != T(1)) {
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] *= beta;
            }
        }
        for (std::size_t p = 0; p < k; ++p) {
            const T av = alpha * (ta == Trans::No ? a[i * lda + p] : a[p * lda + i]);
            if (av == T(0)) {
                continue;
            }
            if (tb == Trans::No) {
                const T* brow = b + p * ldb;
                for (std::size_t j = 0; j < n; ++j) {
                    crow[j] += av * brow[j];
                }
            } else {
                for (std::size_t j = 0; j < n; ++j) {
                    crow[j] += av * b[j * ldb + p];
                }
            }
        }
    }
}

template <typename T>
void axpy(std::size_t n, T a, const T* x, T* y)
{
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += a * x[i];
    }
}

template <typename T>
void scale_shift(std::size_t n, T scale, T shift, const T* x, T* y)
{
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = x[i] * scale + shift;
    }
}

template <typename T>
void relu(std::size_t n, const T* x, T* y)
{
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = x[i] > T(0) ? x[i] : T(0);
    }
}

template <typename T>
void relu_backward(std::size_t n, const T* x, const T* gy, T* gx)
{
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > T(0)) {
            gx[i] += gy[i];
        }
    }
}

template <typename T>
double sum(std::size_t n, const T* x)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += x[i];
    }
    return s;
}

template <typename T>
double dot(std::size_t n, const T* x, const T* y)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += static_cast<double>(x[i]) * y[i];
    }
    return s;
}

template <typename T>
double sum_sq_diff(std::size_t n, const T* x, const T* y)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(x[i]) - y[i];
        s += d * d;
    }
    return s;
}

template <typename T>
double sum_abs_diff(std::size_t n, const T* x, const T* y)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += std::fabs(static_cast<double>(x[i]) - y[i]);
    }
    return s;
}

} // namespace matforge::simd::ref
