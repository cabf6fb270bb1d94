#include "matforge/eval/report.hpp"

#include "matforge/core/error.hpp"
#include "matforge/core/png_io.hpp"
#include "matforge/core/timer.hpp"
#include "matforge/eval/metrics.hpp"
#include "matforge/render/path_tracer.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace matforge::eval {

using nlohmann::json;

namespace {

struct Timing {
    double pre = 0.0, inf = 0.0, total = 0.0;
};

RuntimeRow median_row(std::string pipeline, std::vector<Timing> runs)
{
    std::sort(runs.begin(), runs.end(), [](const Timing& a, const Timing& b) { return a.total < b.total; });
    const Timing& m = runs[runs.size() / 2];
    return {std::move(pipeline), m.pre, m.inf, m.total, int(runs.size())};
}

void require_repeats(int repeats)
{
    if (repeats < 3)
        throw ValueError("bench needs repeats >= 3, got " + std::to_string(repeats));
}

tensor::Tensor planar_tensor(const render::Image& img)
{
    const auto w = std::size_t(img.width), h = std::size_t(img.height);
    return tensor::Tensor::from_data({1, std::size_t(img.channels), h, w}, render::to_planar(img));
}

json row_json(const RuntimeRow& r)
{
    return {{"pipeline", r.pipeline},
            {"preprocess_ms", r.preprocess_ms},
            {"inference_ms", r.inference_ms},
            {"total_ms", r.total_ms},
            {"repeats", r.repeats}};
}

} // namespace

RuntimeRow bench_neural(const neural::Model& model, const BenchInput& in, int repeats)
{
    require_repeats(repeats);
    if (in.resolution != model.config.resolution)
        throw ValueError("bench resolution " + std::to_string(in.resolution) + " does not match the network's " +
                         std::to_string(model.config.resolution));
    std::vector<Timing> runs;
    for (int r = 0; r < repeats; ++r) {
        Timing t;
        const Stopwatch outer;
        Stopwatch sw;
        const auto g = render::rasterize_gbuffer(in.maps, in.resolution, in.threads);
        t.pre = sw.elapsed_ms();
        sw.reset();
        const auto img = neural::infer(model, g, in.light);
        t.inf = sw.elapsed_ms();
        t.total = outer.elapsed_ms();
        runs.push_back(t);
    }
    return median_row("neural", std::move(runs));
}

RuntimeRow bench_reference(const BenchInput& in, int repeats)
{
    require_repeats(repeats);
    render::TraceOptions opts;
    opts.resolution = in.resolution;
    opts.spp = in.spp;
    opts.seed = in.seed;
    opts.threads = in.threads;
    std::vector<Timing> runs;
    for (int r = 0; r < repeats; ++r) {
        Timing t;
        const Stopwatch outer;
        Stopwatch sw;
        render::validate(in.maps);
        render::validate(opts);
        const shading::PerezSky sky(in.light.sky());
        t.pre = sw.elapsed_ms();
        sw.reset();
        const auto img = render::tonemap(render::path_trace(in.maps, sky, opts));
        t.inf = sw.elapsed_ms();
        t.total = outer.elapsed_ms();
        runs.push_back(t);
    }
    return median_row("reference", std::move(runs));
}

render::Image diffuse_baseline(const render::GBuffer& gbuffer, double exposure)
{
    const int r = gbuffer.resolution;
    render::Image img = render::Image::zeros(r, r, 3);
    for (int y = 0; y < r; ++y)
        for (int x = 0; x < r; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = gbuffer.channel(c, x, y);
    return render::tonemap(img, exposure);
}

EvalReport evaluate(const Renderer& renderer, const std::filesystem::path& root, const dataset::Manifest& manifest,
                    const neural::FeatureExtractor& fx, int resolution)
{
    std::vector<const dataset::Entry*> entries;
    for (const auto& e : manifest.entries)
        if (e.test)
            entries.push_back(&e);
    if (entries.empty())
        throw ValueError("the manifest has no test entries");
    std::sort(entries.begin(), entries.end(), [](auto* a, auto* b) { return a->id < b->id; });

    EvalReport report;
    std::vector<Timing> timings;
    for (const dataset::Entry* e : entries) {
        render::MaterialMaps maps;
        render::Image gt;
        try {
            maps = dataset::load_entry_maps(root, e->map_id);
            gt = render::from_image8(read_png(root / e->gt_path));
        } catch (const Error& err) {
            throw IoError("entry " + e->id + ": " + err.what());
        }
        Stopwatch sw;
        const auto g = render::rasterize_gbuffer(maps, resolution);
        Timing t;
        t.pre = sw.elapsed_ms();
        sw.reset();
        const render::Image y = renderer(g, e->light, *e);
        t.inf = sw.elapsed_ms();
        t.total = t.pre + t.inf;
        timings.push_back(t);

        if (y.width != gt.width || y.height != gt.height || y.channels != gt.channels)
            throw ShapeError("entry " + e->id + ": rendered image does not match the ground truth size");
        SampleScore s;
        s.id = e->id;
        s.psnr = psnr(y, gt);
        s.ssim = ssim(y, gt);
        {
            tensor::NoGradGuard no_grad;
            const auto loss = neural::composite_loss(planar_tensor(y), planar_tensor(gt), fx);
            s.l1 = loss.l1;
            s.feature = loss.feature;
        }
        s.preprocess_ms = t.pre;
        s.inference_ms = t.inf;
        report.samples.push_back(s);
    }
    for (const auto& s : report.samples) {
        report.psnr += s.psnr;
        report.ssim += s.ssim;
    }
    report.psnr /= double(report.samples.size());
    report.ssim /= double(report.samples.size());
    report.runtime.push_back(median_row("neural", timings));
    report.config = json{{"psnr", "per-channel mean squared error, cap 99 dB"},
                         {"ssim",
                          {{"luma", {0.299, 0.587, 0.114}},
                           {"window", kSsimWindow},
                           {"k1", kSsimK1},
                           {"k2", kSsimK2},
                           {"dynamic_range", 1.0}}},
                         {"resolution", resolution},
                         {"dataset_seed", manifest.config.seed},
                         {"test_entries", report.samples.size()}}
                        .dump();
    return report;
}

EvalReport evaluate(const neural::Model& model, const std::filesystem::path& root, const dataset::Manifest& manifest,
                    const neural::FeatureExtractor& fx)
{
    auto renderer = [&](const render::GBuffer& g, const dataset::LightCondition& light, const dataset::Entry&) {
        return neural::infer(model, g, light);
    };
    EvalReport r = evaluate(renderer, root, manifest, fx, model.config.resolution);
    auto cfg = json::parse(r.config);
    cfg["network"] = json::parse(neural::config_to_json(model.config));
    r.config = cfg.dump();
    return r;
}

std::string to_json(const EvalReport& r)
{
    json samples = json::array();
    for (const auto& s : r.samples)
        samples.push_back({{"id", s.id},
                           {"psnr", s.psnr},
                           {"ssim", s.ssim},
                           {"l1", s.l1},
                           {"feat", s.feature},
                           {"preprocess_ms", s.preprocess_ms},
                           {"inference_ms", s.inference_ms}});
    json runtime = json::array();
    for (const auto& row : r.runtime)
        runtime.push_back(row_json(row));
    const json j = {{"split", r.split},
                    {"aggregate", {{"psnr", r.psnr}, {"ssim", r.ssim}}},
                    {"samples", samples},
                    {"runtime", runtime},
                    {"config", r.config.empty() ? json::object() : json::parse(r.config)}};
    return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text)
{
    try {
        const json j = json::parse(text);
        EvalReport r;
        r.split = j.at("split").get<std::string>();
        r.psnr = j.at("aggregate").at("psnr").get<double>();
        r.ssim = j.at("aggregate").at("ssim").get<double>();
        for (const auto& s : j.at("samples"))
            r.samples.push_back({s.at("id").get<std::string>(), s.at("psnr").get<double>(), s.at("ssim").get<double>(),
                                 s.at("l1").get<double>(), s.at("feat").get<double>(),
                                 s.at("preprocess_ms").get<double>(), s.at("inference_ms").get<double>()});
        for (const auto& row : j.at("runtime"))
            r.runtime.push_back({row.at("pipeline").get<std::string>(), row.at("preprocess_ms").get<double>(),
                                 row.at("inference_ms").get<double>(), row.at("total_ms").get<double>(),
                                 row.at("repeats").get<int>()});
        const auto& cfg = j.at("config");
        r.config = cfg.empty() ? std::string() : cfg.dump();
        return r;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed report: ") + e.what());
    }
}

std::string to_csv(const EvalReport& r)
{
    std::ostringstream out;
    out << "id,psnr,ssim,preprocess_ms,inference_ms\n";
    char line[256];
    double pre = 0.0, inf = 0.0;
    for (const auto& s : r.samples) {
        std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.3f,%.3f\n", s.id.c_str(), s.psnr, s.ssim, s.preprocess_ms,
                      s.inference_ms);
        out << line;
        pre += s.preprocess_ms;
        inf += s.inference_ms;
    }
    const double n = double(std::max<std::size_t>(1, r.samples.size()));
    std::snprintf(line, sizeof line, "mean,%.6f,%.6f,%.3f,%.3f\n", r.psnr, r.ssim, pre / n, inf / n);
    out << line;
    return out.str();
}

} // namespace matforge::eval
