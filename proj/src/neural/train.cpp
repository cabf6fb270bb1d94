#include "matforge/neural/train.hpp"

#include "matforge/core/error.hpp"
#include "matforge/core/png_io.hpp"
#include "matforge/core/rng.hpp"
#include "matforge/core/timer.hpp"
#include "matforge/render/gbuffer.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

namespace matforge::neural {

namespace fs = std::filesystem;

std::vector<Sample> load_samples(const fs::path& root, const dataset::Manifest& manifest, bool test,
                                 const NetworkConfig& config)
{
    validate(config);
    const int r = config.resolution;
    std::map<std::string, std::vector<float>> gbuffers;
    std::vector<Sample> out;
    for (const auto& e : manifest.entries) {
        if (e.test != test)
            continue;
        try {
            auto it = gbuffers.find(e.map_id);
            if (it == gbuffers.end()) {
                const auto maps = dataset::load_entry_maps(root, e.map_id);
                it = gbuffers.emplace(e.map_id, render::rasterize_gbuffer(maps, r).channels).first;
            }
            const Image8 gt = read_png(root / e.gt_path);
            if (gt.width != r || gt.height != r || gt.channels != 3)
                throw IoError("ground truth is " + std::to_string(gt.width) + "x" + std::to_string(gt.height) + "x" +
                              std::to_string(gt.channels) + ", network expects " + std::to_string(r) + "x" +
                              std::to_string(r) + "x3");
            out.push_back({e.id, it->second, light_vector(e.light, config.light_turbidity),
                           render::to_planar(render::from_image8(gt))});
        } catch (const Error& err) {
            throw IoError("entry " + e.id + ": " + err.what());
        }
    }
    return out;
}

Batch make_batch(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices)
{
    if (indices.empty())
        throw ValueError("empty batch");
    const Sample& first = samples.at(indices[0]);
    const std::size_t n = indices.size(), gsz = first.gbuffer.size(), lsz = first.light.size(),
                      tsz = first.target.size();
    std::vector<float> g, l, t;
    g.reserve(n * gsz);
    l.reserve(n * lsz);
    t.reserve(n * tsz);
    for (std::size_t i : indices) {
        const Sample& s = samples.at(i);
        if (s.gbuffer.size() != gsz || s.light.size() != lsz || s.target.size() != tsz)
            throw ShapeError("sample " + s.id + " does not match the batch shape");
        g.insert(g.end(), s.gbuffer.begin(), s.gbuffer.end());
        l.insert(l.end(), s.light.begin(), s.light.end());
        t.insert(t.end(), s.target.begin(), s.target.end());
    }
    // Square planar images: 3 x r x r.
    const auto r = std::size_t(std::lround(std::sqrt(double(tsz / 3))));
    return {Tensor::from_data({n, gsz / (r * r), r, r}, std::move(g)), Tensor::from_data({n, lsz}, std::move(l)),
            Tensor::from_data({n, 3, r, r}, std::move(t))};
}

void validate(const TrainConfig& c)
{
    if (c.batch < 2)
        throw ValueError("batch must be >= 2 (batch norm)");
    if (c.epochs < 1)
        throw ValueError("epochs must be >= 1");
    if (c.max_steps < 0)
        throw ValueError("max_steps must be >= 0");
    if (!(c.adam.lr > 0.0f))
        throw ValueError("lr must be > 0");
    if (!(c.adam.beta1 >= 0.0f && c.adam.beta1 < 1.0f && c.adam.beta2 >= 0.0f && c.adam.beta2 < 1.0f))
        throw ValueError("betas must be in [0,1)");
}

std::string to_json_line(const LogRecord& r)
{
    const nlohmann::json j = {{"epoch", r.epoch}, {"batch", r.batch},   {"l1", r.l1},
                              {"feat", r.feature}, {"total", r.total}, {"wall_ms", r.wall_ms}};
    return j.dump();
}

double scheduled_lr(const TrainConfig& config, int step, int total_steps)
{
    if (!config.cosine_decay || total_steps <= 0)
        return config.adam.lr;
    return 0.5 * config.adam.lr * (1.0 + std::cos(shading::kPi * double(step) / double(total_steps)));
}

Model train(const std::vector<Sample>& samples, const NetworkConfig& net, const TrainConfig& config,
            const FeatureExtractor& fx, const TrainOutput& output)
{
    validate(config);
    if (samples.size() < 2)
        throw ValueError("training needs at least two samples, got " + std::to_string(samples.size()));
    Model model = build_network(net, config.seed);
    tensor::AdamState adam;
    adam.config = config.adam;

    std::ofstream log;
    if (!output.dir.empty()) {
        std::error_code ec;
        fs::create_directories(output.dir, ec);
        log.open(output.dir / "train_log.jsonl", std::ios::trunc);
        if (ec || !log)
            throw IoError("cannot write training output to " + output.dir.string());
    }

    const int per_epoch = int((samples.size() - 2) / std::size_t(config.batch)) + 1;
    int total_steps = per_epoch * config.epochs;
    if (config.max_steps > 0)
        total_steps = std::min(total_steps, config.max_steps);

    const Stopwatch clock;
    int steps = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<std::size_t> order(samples.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(config.seed, 0xE70C, std::uint64_t(epoch)));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);

        int batch_index = 0;
        for (std::size_t start = 0; start + 1 < order.size(); start += std::size_t(config.batch)) {
            if (config.max_steps > 0 && steps >= config.max_steps)
                break;
            const std::size_t end = std::min(order.size(), start + std::size_t(config.batch));
            const Batch b = make_batch(samples, {order.begin() + long(start), order.begin() + long(end)});
            const Tensor y = forward(model, b.gbuffers, b.lights, NormMode::Train);
            const LossTerms loss = composite_loss(y, b.targets, fx);
            tensor::backward(loss.total);
            adam.config.lr = float(scheduled_lr(config, steps, total_steps));
            tensor::adam_step(model.params, adam);
            ++steps;

            const LogRecord rec{epoch, batch_index++, loss.l1, loss.feature, double(loss.total.item()),
                                clock.elapsed_ms()};
            if (log)
                log << to_json_line(rec) << '\n';
            if (output.on_batch)
                output.on_batch(rec);
        }
        if (!output.dir.empty()) {
            char name[32];
            std::snprintf(name, sizeof name, "epoch_%03d.mfck", epoch);
            save_model(output.dir / name, model);
        }
        if (config.max_steps > 0 && steps >= config.max_steps)
            break;
    }
    if (!output.dir.empty())
        save_model(output.dir / "model.mfck", model);
    return model;
}

} // namespace matforge::neural
