#pragma once

// Benchmarking with the preprocess / inference split and evaluation of a
// renderer against stored ground truth.

#include "matforge/dataset/dataset.hpp"
#include "matforge/neural/loss.hpp"
#include "matforge/neural/network.hpp"
#include "matforge/render/gbuffer.hpp"

#include <functional>
#include <string>
#include <vector>

namespace matforge::eval {

struct RuntimeRow {
    std::string pipeline;  // "neural" or "reference"
    double preprocess_ms = 0.0;
    double inference_ms = 0.0;  // network forward, or path tracing
    double total_ms = 0.0;
    int repeats = 0;
    bool operator==(const RuntimeRow&) const = default;
};

struct BenchInput {
    render::MaterialMaps maps;
    dataset::LightCondition light;
    int resolution = 64;
    int spp = 64;  // reference only
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

// The repeat with the median total time. total_ms is an outer wall-clock
// around the whole pipeline, so preprocess + inference matches it up to
// timer overhead. Neural preprocess is G-buffer rasterization; reference
// preprocess is input validation and sky setup. repeats must be >= 3.
RuntimeRow bench_neural(const neural::Model& model, const BenchInput& input, int repeats);
RuntimeRow bench_reference(const BenchInput& input, int repeats);

struct SampleScore {
    std::string id;
    double psnr = 0.0;
    double ssim = 0.0;
    double l1 = 0.0;
    double feature = 0.0;
    double preprocess_ms = 0.0;
    double inference_ms = 0.0;
    bool operator==(const SampleScore&) const = default;
};

struct EvalReport {
    std::string split = "test";
    std::vector<SampleScore> samples;  // ordered by id
    double psnr = 0.0;                 // mean over samples
    double ssim = 0.0;
    std::vector<RuntimeRow> runtime;
    std::string config;  // JSON echo of the evaluation settings
    bool operator==(const EvalReport&) const = default;
};

std::string to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
// One row per sample plus a "mean" row: id,psnr,ssim,preprocess_ms,inference_ms.
std::string to_csv(const EvalReport& report);

// Renders the LDR image for an entry from its G-buffer. Tests substitute
// stubs here; evaluate(model, ...) uses the network.
using Renderer =
    std::function<render::Image(const render::GBuffer&, const dataset::LightCondition&, const dataset::Entry&)>;

// No-learning baseline: the G-buffer diffuse albedo, tonemapped as if it
// were radiance.
render::Image diffuse_baseline(const render::GBuffer& gbuffer, double exposure = render::kDefaultExposure);

// Scores every test entry. Throws IoError naming the entry whose ground
// truth or maps cannot be read, ValueError if the test split is empty.
EvalReport evaluate(const Renderer& renderer, const std::filesystem::path& root, const dataset::Manifest& manifest,
                    const neural::FeatureExtractor& fx, int resolution);
EvalReport evaluate(const neural::Model& model, const std::filesystem::path& root,
                    const dataset::Manifest& manifest, const neural::FeatureExtractor& fx);

} // namespace matforge::eval
