#include "matforge/core/error.hpp"
#include "matforge/core/png_io.hpp"
#include "matforge/core/rng.hpp"
#include "matforge/dataset/generate.hpp"
#include "matforge/eval/metrics.hpp"
#include "matforge/eval/report.hpp"
#include "support/metric_oracles.hpp"
#include "support/temp_dir.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

using namespace matforge;
using namespace matforge::eval;
using matforge::testing::TempDir;
using render::Image;

namespace {

Image random_image(int w, int h, int c, std::uint64_t seed)
{
    Rng rng(seed);
    Image img = Image::zeros(w, h, c);
    for (float& v : img.pixels)
        v = float(rng.uniform());
    return img;
}

Image filled(int w, int h, int c, float v)
{
    Image img = Image::zeros(w, h, c);
    std::fill(img.pixels.begin(), img.pixels.end(), v);
    return img;
}

std::vector<double> as_double(const Image& img)
{
    return {img.pixels.begin(), img.pixels.end()};
}

struct SmallDataset {
    TempDir dir{"eval-ds"};
    dataset::Manifest manifest;

    SmallDataset()
    {
        dataset::DatasetConfig c;
        c.n_maps = 3;
        c.lights_per_map = 2;
        c.map_resolution = 16;
        c.render_resolution = 16;
        c.spp = 2;
        c.test_count = 3;
        c.seed = 5;
        manifest = dataset::build_dataset(c, dir.path());
    }
};

} // namespace

TEST(Psnr, IdenticalImagesHitTheCap)
{
    const auto a = random_image(8, 8, 3, 1);
    EXPECT_EQ(psnr(a, a), 99.0);
}

TEST(Psnr, UniformOffsetOfOneTenthIsTwentyDecibels)
{
    EXPECT_NEAR(psnr(filled(8, 8, 3, 0.25f), filled(8, 8, 3, 0.35f)), 20.0, 1e-5);
}

TEST(Psnr, SymmetricAndShapeChecked)
{
    const auto a = random_image(8, 8, 3, 1), b = random_image(8, 8, 3, 2);
    EXPECT_EQ(psnr(a, b), psnr(b, a));
    EXPECT_THROW(psnr(a, random_image(8, 4, 3, 2)), ShapeError);
}

TEST(Ssim, IdenticalImagesGiveOne)
{
    const auto a = random_image(16, 16, 3, 3);
    EXPECT_EQ(ssim(a, a), 1.0);
}

TEST(Ssim, InvertedCheckerboardIsNegative)
{
    Image a = Image::zeros(16, 16, 3), b = Image::zeros(16, 16, 3);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            for (int c = 0; c < 3; ++c) {
                a.at(x, y, c) = float((x + y) % 2);
                b.at(x, y, c) = 1.0f - a.at(x, y, c);
            }
    // Every window: means 0.5, variances 0.25, covariance -0.25.
    const double c1 = 1e-4, c2 = 9e-4;
    const double expected = (0.5 + c1) * (-0.5 + c2) / ((0.5 + c1) * (0.5 + c2));
    EXPECT_NEAR(ssim(a, b), expected, 1e-6);
    EXPECT_LT(ssim(a, b), 0.0);
}

TEST(Ssim, SymmetricAndNeedsAFullWindow)
{
    const auto a = random_image(12, 10, 3, 1), b = random_image(12, 10, 3, 2);
    EXPECT_EQ(ssim(a, b), ssim(b, a));
    EXPECT_THROW(ssim(random_image(7, 16, 3, 1), random_image(7, 16, 3, 1)), ValueError);
}

TEST(Metrics, MatchDirectFormulaOracles)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto a = random_image(16, 16, 1, 10 + seed);
        auto b = a;
        Rng rng(seed);
        for (float& v : b.pixels)
            v = std::clamp(v + float(rng.uniform(-0.2, 0.2)), 0.0f, 1.0f);
        EXPECT_NEAR(psnr(a, b), matforge::testing::psnr_oracle(as_double(a), as_double(b)), 1e-6);
        EXPECT_NEAR(ssim(a, b), matforge::testing::ssim_oracle(as_double(a), as_double(b), 16, 16), 1e-6);
    }
}

TEST(Bench, NeuralSplitAddsUpToTotal)
{
    neural::NetworkConfig c;
    c.resolution = 32;
    c.widths = {8, 8, 8};
    const auto model = neural::build_network(c, 1);
    BenchInput in{dataset::gen_svbrdf_map(1, 32), {shading::normalize({0.3, 0.8, 0.5}), 3.0}, 32, 4, 0, 1};
    const auto row = bench_neural(model, in, 3);
    EXPECT_EQ(row.pipeline, "neural");
    EXPECT_GT(row.preprocess_ms, 0.0);
    EXPECT_GT(row.inference_ms, 0.0);
    EXPECT_NEAR(row.preprocess_ms + row.inference_ms, row.total_ms, 0.05 + 0.01 * row.total_ms);
    EXPECT_THROW(bench_neural(model, in, 2), ValueError);
    in.resolution = 64;
    EXPECT_THROW(bench_neural(model, in, 3), ValueError);
}

TEST(Bench, ReferenceTimeScalesWithSamples)
{
    BenchInput in{dataset::gen_uniform_map(2, 16), {shading::normalize({0.3, 0.8, 0.5}), 3.0}, 32, 64, 0, 1};
    const auto one = bench_reference(in, 7);
    in.spp = 128;
    const auto two = bench_reference(in, 7);
    EXPECT_GT(one.preprocess_ms, 0.0);
    const double ratio = two.inference_ms / one.inference_ms;
    std::printf("spp 64: %.2f ms, spp 128: %.2f ms, ratio %.3f\n", one.inference_ms, two.inference_ms, ratio);
    EXPECT_GE(ratio, 1.7);
    EXPECT_LE(ratio, 2.5);
}

TEST(Bench, RepeatedBenchesAreStable)
{
    BenchInput in{dataset::gen_uniform_map(2, 16), {shading::normalize({0.3, 0.8, 0.5}), 3.0}, 32, 16, 0, 1};
    std::vector<double> totals;
    for (int i = 0; i < 3; ++i)
        totals.push_back(bench_reference(in, 3).total_ms);
    const auto [lo, hi] = std::minmax_element(totals.begin(), totals.end());
    EXPECT_LT(*hi / *lo, 1.5);
}

TEST(Evaluate, GroundTruthStubScoresPerfectly)
{
    SmallDataset ds;
    const auto root = ds.dir.path();
    auto stub = [&](const render::GBuffer&, const dataset::LightCondition&, const dataset::Entry& e) {
        return render::from_image8(read_png(root / e.gt_path));
    };
    const auto r = evaluate(stub, root, ds.manifest, neural::FeatureExtractor::seeded(1), 16);
    ASSERT_EQ(r.samples.size(), 3u);
    EXPECT_EQ(r.psnr, 99.0);
    EXPECT_EQ(r.ssim, 1.0);
    EXPECT_TRUE(std::is_sorted(r.samples.begin(), r.samples.end(),
                               [](const SampleScore& a, const SampleScore& b) { return a.id < b.id; }));
    ASSERT_EQ(r.runtime.size(), 1u);
    EXPECT_GT(r.runtime[0].total_ms, 0.0);
}

TEST(Evaluate, ConstantGrayStubCompletesWithFiniteScores)
{
    SmallDataset ds;
    auto stub = [](const render::GBuffer& g, const dataset::LightCondition&, const dataset::Entry&) {
        return filled(g.resolution, g.resolution, 3, 0.5f);
    };
    const auto r = evaluate(stub, ds.dir.path(), ds.manifest, neural::FeatureExtractor::seeded(1), 16);
    double mean = 0.0;
    for (const auto& s : r.samples) {
        EXPECT_TRUE(std::isfinite(s.psnr));
        EXPECT_LT(s.psnr, 99.0);
        mean += s.psnr;
    }
    EXPECT_NEAR(r.psnr, mean / double(r.samples.size()), 1e-9);
}

TEST(Evaluate, NetworkReportRoundTripsThroughJson)
{
    SmallDataset ds;
    neural::NetworkConfig c;
    c.resolution = 16;
    c.widths = {4, 4, 4};
    const auto model = neural::build_network(c, 2);
    const auto r = evaluate(model, ds.dir.path(), ds.manifest, neural::FeatureExtractor::seeded(1));
    const auto text = to_json(r);
    EXPECT_EQ(report_from_json(text), r);
    EXPECT_EQ(to_json(report_from_json(text)), text);
    const auto csv = to_csv(r);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
    EXPECT_EQ(csv.rfind("mean,", std::string::npos) != std::string::npos, true);
}

TEST(Evaluate, MissingGroundTruthNamesTheEntry)
{
    SmallDataset ds;
    const dataset::Entry* victim = nullptr;
    for (const auto& e : ds.manifest.entries)
        if (e.test)
            victim = &e;
    std::filesystem::remove(ds.dir / victim->gt_path);
    auto stub = [](const render::GBuffer& g, const dataset::LightCondition&, const dataset::Entry&) {
        return filled(g.resolution, g.resolution, 3, 0.5f);
    };
    try {
        evaluate(stub, ds.dir.path(), ds.manifest, neural::FeatureExtractor::identity(), 16);
        FAIL() << "expected an error";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find(victim->id), std::string::npos) << e.what();
    }
}

TEST(Evaluate, EmptyTestSplitIsRejected)
{
    SmallDataset ds;
    for (auto& e : ds.manifest.entries)
        e.test = false;
    auto stub = [](const render::GBuffer& g, const dataset::LightCondition&, const dataset::Entry&) {
        return filled(g.resolution, g.resolution, 3, 0.5f);
    };
    EXPECT_THROW(evaluate(stub, ds.dir.path(), ds.manifest, neural::FeatureExtractor::identity(), 16), ValueError);
}
