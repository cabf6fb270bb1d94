#include "support/gradient_checks.hpp"

#include <gtest/gtest.h>

using matforge::testing::gradient_instance;
using matforge::testing::gradient_layers;

namespace {

constexpr int kInstances = 20;
constexpr double kTolerance = 1e-3;

class GradientCheck : public ::testing::TestWithParam<std::string> {};

} // namespace

TEST_P(GradientCheck, MatchesCentralDifferences)
{
    for (int i = 0; i < kInstances; ++i) {
        EXPECT_LT(gradient_instance(GetParam(), i), kTolerance) << "instance " << i;
    }
}

INSTANTIATE_TEST_SUITE_P(Layers, GradientCheck, ::testing::ValuesIn(gradient_layers()),
                         [](const auto& info) { return info.param; });
