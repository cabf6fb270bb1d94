#include "matforge/core/rng.hpp"
#include "matforge/simd/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace matforge;
using simd::Isa;
using simd::Trans;

namespace {

std::vector<float> random_floats(std::size_t n, Rng& rng)
{
    std::vector<float> v(n);
    for (auto& x : v) {
        x = static_cast<float>(rng.uniform(-1.0, 1.0));
    }
    return v;
}

class KernelEquivalence : public ::testing::Test {
protected:
    void SetUp() override
    {
        if (!simd::isa_available(Isa::Avx2)) {
            GTEST_SKIP() << "AVX2 not available";
        }
    }
    const simd::KernelTable& scalar = simd::kernels_for(Isa::Scalar);
    const simd::KernelTable& vec() { return simd::kernels_for(Isa::Avx2); }
};

} // namespace

TEST(KernelDispatch, ScalarAlwaysAvailable)
{
    EXPECT_TRUE(simd::isa_available(Isa::Scalar));
    EXPECT_EQ(simd::kernels_for(Isa::Scalar).isa, Isa::Scalar);
    EXPECT_FALSE(simd::kernels().name.empty());
}

TEST_F(KernelEquivalence, GemmAllTranspositionsAndTails)
{
    Rng rng(11);
    const std::size_t sizes[][3] = {{1, 1, 1}, {3, 5, 7}, {4, 16, 9}, {7, 33, 20}, {16, 100, 64}, {9, 17, 1}};
    for (auto [m, n, k] : sizes) {
        for (Trans ta : {Trans::No, Trans::Yes}) {
            for (Trans tb : {Trans::No, Trans::Yes}) {
                for (float beta : {0.0f, 1.0f, 0.5f}) {
                    const std::size_t lda = ta == Trans::No ? k : m;
                    const std::size_t ldb = tb == Trans::No ? n : k;
                    const auto a = random_floats(m * k, rng);
                    const auto b = random_floats(k * n, rng);
                    auto c_ref = random_floats(m * n, rng);
                    auto c_vec = c_ref;
                    scalar.gemm(ta, tb, m, n, k, 0.75f, a.data(), lda, b.data(), ldb, beta, c_ref.data(), n);
                    vec().gemm(ta, tb, m, n, k, 0.75f, a.data(), lda, b.data(), ldb, beta, c_vec.data(), n);
                    for (std::size_t i = 0; i < c_ref.size(); ++i) {
                        ASSERT_NEAR(c_ref[i], c_vec[i], 1e-5f * (1.0f + std::sqrt(float(k))))
                            << m << "x" << n << "x" << k << " ta=" << int(ta) << " tb=" << int(tb);
                    }
                }
            }
        }
    }
}

TEST_F(KernelEquivalence, ElementwiseKernels)
{
    Rng rng(5);
    for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 31u, 1000u}) {
        const auto x = random_floats(n, rng);
        const auto gy = random_floats(n, rng);
        auto y_ref = random_floats(n, rng);
        auto y_vec = y_ref;

        scalar.axpy(n, -0.3f, x.data(), y_ref.data());
        vec().axpy(n, -0.3f, x.data(), y_vec.data());
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(y_ref[i], y_vec[i], 1e-6f);
        }

        scalar.scale_shift(n, 1.7f, -0.2f, x.data(), y_ref.data());
        vec().scale_shift(n, 1.7f, -0.2f, x.data(), y_vec.data());
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(y_ref[i], y_vec[i], 1e-6f);
        }

        scalar.relu(n, x.data(), y_ref.data());
        vec().relu(n, x.data(), y_vec.data());
        EXPECT_EQ(y_ref, y_vec);

        std::vector<float> g_ref(n, 0.5f), g_vec(n, 0.5f);
        scalar.relu_backward(n, x.data(), gy.data(), g_ref.data());
        vec().relu_backward(n, x.data(), gy.data(), g_vec.data());
        EXPECT_EQ(g_ref, g_vec);
    }
}

TEST_F(KernelEquivalence, Reductions)
{
    Rng rng(9);
    for (std::size_t n : {0u, 1u, 5u, 8u, 13u, 4096u, 4099u}) {
        const auto x = random_floats(n, rng);
        const auto y = random_floats(n, rng);
        EXPECT_NEAR(scalar.sum(n, x.data()), vec().sum(n, x.data()), 1e-9);
        EXPECT_NEAR(scalar.dot(n, x.data(), y.data()), vec().dot(n, x.data(), y.data()), 1e-9);
        EXPECT_NEAR(scalar.sum_sq_diff(n, x.data(), y.data()), vec().sum_sq_diff(n, x.data(), y.data()), 1e-9);
        EXPECT_NEAR(scalar.sum_abs_diff(n, x.data(), y.data()), vec().sum_abs_diff(n, x.data(), y.data()), 1e-9);
    }
}

TEST(KernelDispatch, SelectIsaSwitchesActiveTable)
{
    const auto previous = simd::kernels().isa;
    simd::select_isa(Isa::Scalar);
    EXPECT_EQ(simd::kernels().isa, Isa::Scalar);
    simd::select_isa(previous);
    EXPECT_EQ(simd::kernels().isa, previous);
}
