// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include "kernels_impl.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cstdint>
#include <vector>

namespace matforge::simd::detail {

namespace {

constexpr std::size_t kRows = 4;   // microkernel rows of C
constexpr std::size_t kCols = 16;  // microkernel columns of C (two ymm)

// Lane mask selecting the first `count` (0..8) floats.
inline __m256i tail_mask(std::size_t count)
{
    alignas(32) static const std::int32_t table[16] = {-1, -1, -1, -1, -1, -1, -1, -1, 0, 0, 0, 0, 0, 0, 0, 0};
    return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(table + 8 - count));
}

inline void store_cols(float* c, __m256 v0, __m256 v1, std::size_t width, float beta)
{
    if (width == kCols) {
        if (beta != 0.0f) {
            const __m256 vb = _mm256_set1_ps(beta);
            v0 = _mm256_fmadd_ps(vb, _mm256_loadu_ps(c), v0);
            v1 = _mm256_fmadd_ps(vb, _mm256_loadu_ps(c + 8), v1);
        }
        _mm256_storeu_ps(c, v0);
        _mm256_storeu_ps(c + 8, v1);
        return;
    }
    const std::size_t w0 = std::min<std::size_t>(width, 8);
    const std::size_t w1 = width - w0;
    const __m256i m0 = tail_mask(w0);
    const __m256i m1 = tail_mask(w1);
    if (beta != 0.0f) {
        const __m256 vb = _mm256_set1_ps(beta);
        v0 = _mm256_fmadd_ps(vb, _mm256_maskload_ps(c, m0), v0);
        if (w1 > 0) {
            v1 = _mm256_fmadd_ps(vb, _mm256_maskload_ps(c + 8, m1), v1);
        }
    }
    _mm256_maskstore_ps(c, m0, v0);
    if (w1 > 0) {
        _mm256_maskstore_ps(c + 8, m1, v1);
    }
}

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha, const float* a,
          std::size_t lda, const float* b, std::size_t ldb, float beta, float* c, std::size_t ldc)
{
    if (m == 0 || n == 0) {
        return;
    }
    if (k == 0) {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                c[i * ldc + j] = beta == 0.0f ? 0.0f : beta * c[i * ldc + j];
            }
        }
        return;
    }

    // Column panel of op(B), k x 16, contiguous and zero padded.
    thread_local std::vector<float> panel;
    panel.resize(k * kCols);

    const std::size_t a_row = ta == Trans::No ? lda : 1;
    const std::size_t a_col = ta == Trans::No ? 1 : lda;
    const __m256 valpha = _mm256_set1_ps(alpha);

    for (std::size_t j = 0; j < n; j += kCols) {
        const std::size_t width = std::min(kCols, n - j);
        for (std::size_t p = 0; p < k; ++p) {
            float* dst = panel.data() + p * kCols;
            if (tb == Trans::No) {
                const float* src = b + p * ldb + j;
                std::size_t q = 0;
                for (; q < width; ++q) {
                    dst[q] = src[q];
                }
                for (; q < kCols; ++q) {
                    dst[q] = 0.0f;
                }
            } else {
                std::size_t q = 0;
                for (; q < width; ++q) {
                    dst[q] = b[(j + q) * ldb + p];
                }
                for (; q < kCols; ++q) {
                    dst[q] = 0.0f;
                }
            }
        }

        std::size_t i = 0;
        for (; i + kRows <= m; i += kRows) {
            __m256 c00 = _mm256_setzero_ps(), c01 = _mm256_setzero_ps();
            __m256 c10 = _mm256_setzero_ps(), c11 = _mm256_setzero_ps();
            __m256 c20 = _mm256_setzero_ps(), c21 = _mm256_setzero_ps();
            __m256 c30 = _mm256_setzero_ps(), c31 = _mm256_setzero_ps();
            const float* a0 = a + i * a_row;
            for (std::size_t p = 0; p < k; ++p) {
                const float* bp = panel.data() + p * kCols;
                const __m256 b0 = _mm256_loadu_ps(bp);
                const __m256 b1 = _mm256_loadu_ps(bp + 8);
                const float* ap = a0 + p * a_col;
                __m256 av = _mm256_broadcast_ss(ap);
                c00 = _mm256_fmadd_ps(av, b0, c00);
                c01 = _mm256_fmadd_ps(av, b1, c01);
                av = _mm256_broadcast_ss(ap + a_row);
                c10 = _mm256_fmadd_ps(av, b0, c10);
                c11 = _mm256_fmadd_ps(av, b1, c11);
                av = _mm256_broadcast_ss(ap + 2 * a_row);
                c20 = _mm256_fmadd_ps(av, b0, c20);
                c21 = _mm256_fmadd_ps(av, b1, c21);
                av = _mm256_broadcast_ss(ap + 3 * a_row);
                c30 = _mm256_fmadd_ps(av, b0, c30);
                c31 = _mm256_fmadd_ps(av, b1, c31);
            }
            float* crow = c + i * ldc + j;
            store_cols(crow, _mm256_mul_ps(valpha, c00), _mm256_mul_ps(valpha, c01), width, beta);
            store_cols(crow + ldc, _mm256_mul_ps(valpha, c10), _mm256_mul_ps(valpha, c11), width, beta);
            store_cols(crow + 2 * ldc, _mm256_mul_ps(valpha, c20), _mm256_mul_ps(valpha, c21), width, beta);
            store_cols(crow + 3 * ldc, _mm256_mul_ps(valpha, c30), _mm256_mul_ps(valpha, c31), width, beta);
        }
        for (; i < m; ++i) {
            __m256 c0 = _mm256_setzero_ps(), c1 = _mm256_setzero_ps();
            const float* a0 = a + i * a_row;
            for (std::size_t p = 0; p < k; ++p) {
                const float* bp = panel.data() + p * kCols;
                const __m256 av = _mm256_broadcast_ss(a0 + p * a_col);
                c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(bp), c0);
                c1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(bp + 8), c1);
            }
            store_cols(c + i * ldc + j, _mm256_mul_ps(valpha, c0), _mm256_mul_ps(valpha, c1), width, beta);
        }
    }
}

void axpy(std::size_t n, float a, const float* x, float* y)
{
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    for (; i < n; ++i) {
        y[i] += a * x[i];
    }
}

void scale_shift(std::size_t n, float scale, float shift, const float* x, float* y)
{
    const __m256 vs = _mm256_set1_ps(scale);
    const __m256 vb = _mm256_set1_ps(shift);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(_mm256_loadu_ps(x + i), vs, vb));
    }
    for (; i < n; ++i) {
        y[i] = x[i] * scale + shift;
    }
}

void relu(std::size_t n, const float* x, float* y)
{
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
    }
    for (; i < n; ++i) {
        y[i] = x[i] > 0.0f ? x[i] : 0.0f;
    }
}

void relu_backward(std::size_t n, const float* x, const float* gy, float* gx)
{
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 keep = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
        const __m256 g = _mm256_and_ps(keep, _mm256_loadu_ps(gy + i));
        _mm256_storeu_ps(gx + i, _mm256_add_ps(_mm256_loadu_ps(gx + i), g));
    }
    for (; i < n; ++i) {
        if (x[i] > 0.0f) {
            gx[i] += gy[i];
        }
    }
}

inline double hsum(__m256d v)
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

template <typename Lane, typename Tail>
double reduce(std::size_t n, Lane lane, Tail tail)
{
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = lane(i);
        acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
        acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        s += tail(i);
    }
    return s;
}

double sum(std::size_t n, const float* x)
{
    return reduce(
        n, [&](std::size_t i) { return _mm256_loadu_ps(x + i); }, [&](std::size_t i) { return double(x[i]); });
}

// Products and differences below are formed in double per lane so the
// result matches the scalar reference up to summation order.
double dot(std::size_t n, const float* x, const float* y)
{
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vx = _mm256_loadu_ps(x + i);
        const __m256 vy = _mm256_loadu_ps(y + i);
        acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(vx)),
                               _mm256_cvtps_pd(_mm256_castps256_ps128(vy)), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(vx, 1)),
                               _mm256_cvtps_pd(_mm256_extractf128_ps(vy, 1)), acc1);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        s += static_cast<double>(x[i]) * y[i];
    }
    return s;
}

double sum_sq_diff(std::size_t n, const float* x, const float* y)
{
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vx = _mm256_loadu_ps(x + i);
        const __m256 vy = _mm256_loadu_ps(y + i);
        const __m256d d0 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(vx)),
                                         _mm256_cvtps_pd(_mm256_castps256_ps128(vy)));
        const __m256d d1 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(vx, 1)),
                                         _mm256_cvtps_pd(_mm256_extractf128_ps(vy, 1)));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = static_cast<double>(x[i]) - y[i];
        s += d * d;
    }
    return s;
}

double sum_abs_diff(std::size_t n, const float* x, const float* y)
{
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vx = _mm256_loadu_ps(x + i);
        const __m256 vy = _mm256_loadu_ps(y + i);
        const __m256d d0 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(vx)),
                                         _mm256_cvtps_pd(_mm256_castps256_ps128(vy)));
        const __m256d d1 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(vx, 1)),
                                         _mm256_cvtps_pd(_mm256_extractf128_ps(vy, 1)));
        acc0 = _mm256_add_pd(acc0, _mm256_andnot_pd(sign, d0));
        acc1 = _mm256_add_pd(acc1, _mm256_andnot_pd(sign, d1));
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = static_cast<double>(x[i]) - y[i];
        s += d < 0 ? -d : d;
    }
    return s;
}

} // namespace

const KernelTable& avx2_table()
{
    static const KernelTable table{
        Isa::Avx2, "avx2", &gemm, &axpy, &scale_shift, &relu, &relu_backward, &sum, &dot, &sum_sq_diff, &sum_abs_diff,
    };
    return table;
}

} // namespace matforge::simd::detail
