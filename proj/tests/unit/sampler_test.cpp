#include "matforge/core/sampler.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace matforge;

TEST(Sampler, PermuteIsABijection)
{
    for (std::uint32_t l : {1u, 2u, 3u, 7u, 64u, 100u, 257u}) {
        for (std::uint32_t p : {0u, 1u, 0xdeadbeefu, 12345u}) {
            std::vector<int> seen(l, 0);
            for (std::uint32_t i = 0; i < l; ++i)
                ++seen[permute_index(i, l, p)];
            EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; })) << l << " " << p;
        }
    }
}

TEST(Sampler, EachDimensionCoversEveryStratumOnce)
{
    const std::uint32_t spp = 37;
    StratifiedSampler s(99, spp);
    std::vector<std::vector<int>> counts(6, std::vector<int>(spp, 0));
    for (std::uint32_t i = 0; i < spp; ++i) {
        s.start_sample(i);
        for (int d = 0; d < 6; ++d) {
            const double u = s.next();
            ASSERT_GE(u, 0.0);
            ASSERT_LT(u, 1.0);
            ++counts[d][std::size_t(u * spp)];
        }
    }
    for (const auto& c : counts)
        EXPECT_TRUE(std::all_of(c.begin(), c.end(), [](int v) { return v == 1; }));
}

TEST(Sampler, DimensionsAreUncorrelated)
{
    // Pearson correlation between two dimensions over many pixels.
    double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
    int n = 0;
    for (std::uint64_t pixel = 0; pixel < 400; ++pixel) {
        StratifiedSampler s(derive_seed(1, pixel), 16);
        for (std::uint32_t i = 0; i < 16; ++i) {
            s.start_sample(i);
            const double x = s.next(), y = s.next();
            sx += x;
            sy += y;
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
            ++n;
        }
    }
    const double cov = sxy / n - sx / n * sy / n;
    const double r = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
    // Standard error of r is ~1/sqrt(6400) = 0.0125.
    EXPECT_LT(std::abs(r), 0.05);
}

TEST(Sampler, Deterministic)
{
    StratifiedSampler a(5, 8), b(5, 8);
    a.start_sample(3);
    b.start_sample(3);
    for (int d = 0; d < 10; ++d)
        EXPECT_EQ(a.next(), b.next());
}
