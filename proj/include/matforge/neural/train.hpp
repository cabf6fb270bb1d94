#pragma once

#include "matforge/dataset/dataset.hpp"
#include "matforge/neural/loss.hpp"
#include "matforge/neural/network.hpp"
#include "matforge/tensor/optim.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace matforge::neural {

// One training pair: planar G-buffer, light vector and planar target image.
struct Sample {
    std::string id;
    std::vector<float> gbuffer;  // 10 x R x R
    std::vector<float> light;    // 3 or 4
    std::vector<float> target;   // 3 x R x R in [0,1]
};

// Reads every entry of one split, rasterizing each map's G-buffer once.
// All entries are checked before anything is returned; the first bad one
// (missing or undecodable file, wrong size) is named in the IoError.
std::vector<Sample> load_samples(const std::filesystem::path& root, const dataset::Manifest& manifest, bool test,
                                 const NetworkConfig& config);

// Stacks samples [first, first + count) of `order` into batch tensors.
struct Batch {
    Tensor gbuffers;
    Tensor lights;
    Tensor targets;
};
Batch make_batch(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices);

struct TrainConfig {
    tensor::AdamConfig adam;  // lr 1e-2, betas 0.9 / 0.999
    int batch = 6;
    int epochs = 30;
    int max_steps = 0;  // stop after this many optimizer steps; 0 = no cap
    bool cosine_decay = false;  // anneal lr from adam.lr to 0 over the run
    std::uint64_t seed = 0;
    std::uint64_t feature_seed = 0x5EED;
};

void validate(const TrainConfig& config);

// Learning rate for optimizer step `step` (0-based) of `total_steps`.
double scheduled_lr(const TrainConfig& config, int step, int total_steps);

struct LogRecord {
    int epoch = 0;
    int batch = 0;
    double l1 = 0.0;
    double feature = 0.0;
    double total = 0.0;
    double wall_ms = 0.0;
};

std::string to_json_line(const LogRecord& record);

struct TrainOutput {
    std::filesystem::path dir;  // empty: keep everything in memory
    std::function<void(const LogRecord&)> on_batch;
};

// Adam on the composite loss over per-epoch seeded shuffles. A trailing
// batch of one sample is skipped since batch norm needs two. With an
// output dir it writes train_log.jsonl, epoch_<e>.mfck after each epoch
// and model.mfck (+ .json sidecar) at the end.
Model train(const std::vector<Sample>& samples, const NetworkConfig& net, const TrainConfig& config,
            const FeatureExtractor& fx, const TrainOutput& output = {});

} // namespace matforge::neural
