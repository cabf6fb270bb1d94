#pragma once

#include <cstddef>
#include <string_view>

namespace matforge::simd {

enum class Isa { Scalar, Avx2 };

enum class Trans { No, Yes };

// Table of the data-parallel float kernels the library is built on. Every
// entry has a scalar reference implementation; vector variants must agree
// with it to rounding (see tests/unit/simd_kernels_test.cpp).
struct KernelTable {
    Isa isa;
    std::string_view name;

    // Row-major C = alpha * op(A) * op(B) + beta * C, op(A) is m x k, op(B) is k x n.
    void (*gemm)(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha, const float* a,
                 std::size_t lda, const float* b, std::size_t ldb, float beta, float* c, std::size_t ldc);

    // y += a * x
    void (*axpy)(std::size_t n, float a, const float* x, float* y);
    // y = x * scale + shift
    void (*scale_shift)(std::size_t n, float scale, float shift, const float* x, float* y);
    // y = max(x, 0)
    void (*relu)(std::size_t n, const float* x, float* y);
    // gx += gy where x > 0
    void (*relu_backward)(std::size_t n, const float* x, const float* gy, float* gx);

    // Reductions accumulate in double.
    double (*sum)(std::size_t n, const float* x);
    double (*dot)(std::size_t n, const float* x, const float* y);
    double (*sum_sq_diff)(std::size_t n, const float* x, const float* y);
    double (*sum_abs_diff)(std::size_t n, const float* x, const float* y);
};

// True when the CPU (and the build) provides the instruction set.
bool isa_available(Isa isa) noexcept;

// Kernel table for a specific ISA; throws ValueError when unavailable.
const KernelTable& kernels_for(Isa isa);

// Active table. Chosen once at first use: the best available ISA, unless
// MATFORGE_SIMD=scalar|avx2 overrides it.
const KernelTable& kernels();

// Overrides the active table (tests, benchmarks). Not thread-safe with
// respect to concurrent kernel calls.
void select_isa(Isa isa);

} // namespace matforge::simd
