// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned here.
//
// Exit status is 0 when every criterion passes or fails only where listed
// with --expect-fail; an unexpected FAIL (or an error) exits 1.

#include "matforge/core/error.hpp"
#include "matforge/core/png_io.hpp"
#include "matforge/core/timer.hpp"
#include "matforge/dataset/dataset.hpp"
#include "matforge/eval/report.hpp"
#include "matforge/neural/loss.hpp"
#include "matforge/neural/network.hpp"
#include "matforge/neural/train.hpp"
#include "matforge/service/cli.hpp"

#include "support/gradient_checks.hpp"
#include "support/light_probe.hpp"
#include "support/render_checks.hpp"
#include "support/shading_checks.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace matforge;

namespace {

// Gradient correctness
constexpr int kGradInstances = 20;
constexpr double kGradTolerance = 1e-3;
constexpr double kGradBudgetS = 120.0;

// BRDF physics
constexpr int kReciprocityCases = 1000;
constexpr double kReciprocityTolerance = 1e-6;
constexpr int kFurnaceSamples = 100000;
constexpr double kFurnaceBound = 1.02;
constexpr double kBrdfBudgetS = 300.0;

// Path tracer
constexpr int kPtFurnaceResolution = 24;
constexpr int kPtFurnaceSpp = 256;
constexpr int kPtFurnaceBounces = 64;  // any cap >= 8 qualifies; a deep one keeps truncation out of the measurement
constexpr double kPtFurnaceTolerance = 0.02;
constexpr double kDirectTolerance = 0.01;
constexpr double kVarianceLo = 0.4, kVarianceHi = 0.65;

// Loss identities
constexpr double kLossTolerance = 1e-7;

// Overfit
constexpr int kOverfitSteps = 500;
constexpr double kOverfitL1 = 0.02;
constexpr double kOverfitBudgetS = 15 * 60.0;

// Desk scale
constexpr int kDeskMaps = 256;
constexpr int kDeskLights = 5;
constexpr int kDeskEpochs = 10;
constexpr int kDeskBatch = 6;
constexpr float kDeskLr = 1e-2f;
constexpr double kDeskMarginDb = 1.0;
constexpr double kDeskBudgetS = 4 * 3600.0;

// Light controllability
constexpr int kProbeMaterials = 20;
constexpr double kProbeElevationDeg = 30.0;
constexpr double kProbeTurbidity = 3.0;
constexpr double kProbeSectorToleranceDeg = 45.0;
constexpr double kProbeTrackFraction = 0.7;
constexpr double kAzimuthChangeMad = 0.01;

// Latency
constexpr double kInferenceBudgetMs = 2000.0;
constexpr int kBenchRepeats = 5;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof(buf), format, args...);
    return buf;
}

struct Context {
    fs::path work;
    std::optional<neural::Model> desk_model;  // shared by the criteria that need a trained network
    std::string desk_problem;                 // why desk_model is missing
};

// gradient-correctness ------------------------------------------------------

Outcome gradient_correctness(Context&)
{
    Stopwatch sw;
    double worst = 0.0;
    std::string worst_layer;
    for (const auto& layer : testing::gradient_layers()) {
        const double e = testing::worst_gradient_error(layer, kGradInstances);
        if (e >= worst) {
            worst = e;
            worst_layer = layer;
        }
    }
    const double s = sw.elapsed_ms() / 1000.0;
    return {worst < kGradTolerance && s < kGradBudgetS,
            fmt("layers=%zu instances=%d max_rel_err=%.2e (%s) tol=%.0e runtime=%.1fs budget=%.0fs",
                testing::gradient_layers().size(), kGradInstances, worst, worst_layer.c_str(), kGradTolerance, s,
                kGradBudgetS)};
}

// brdf-physics --------------------------------------------------------------

Outcome brdf_physics(Context&)
{
    Stopwatch sw;
    const double recip = testing::reciprocity_max_error(kReciprocityCases, 5);
    const auto furnace = testing::white_furnace_worst(kFurnaceSamples, 7);
    const double s = sw.elapsed_ms() / 1000.0;
    return {recip <= kReciprocityTolerance && furnace.worst <= kFurnaceBound && s < kBrdfBudgetS,
            fmt("reciprocity_max=%.2e (tol %.0e, %d cases) furnace_max=%.4f at roughness %.2f f0 %.2f view %.0fdeg "
                "(bound %.2f, %d samples) runtime=%.1fs",
                recip, kReciprocityTolerance, kReciprocityCases, furnace.worst, furnace.roughness, furnace.f0,
                furnace.wo_theta_deg, kFurnaceBound, kFurnaceSamples, s)};
}

// path-tracer-correctness ---------------------------------------------------

render::MaterialMaps checker_maps(int size, float specular)
{
    auto m = render::MaterialMaps::uniform(size, shading::Rgb::gray(0.5), shading::Rgb::gray(specular), 0.5);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            if ((x + y) % 2)
                for (int c = 0; c < 3; ++c)
                    m.diffuse[(y * size + x) * 3 + c] = 0.9f;
    return m;
}

Outcome path_tracer_correctness(Context&)
{
    const shading::SkyParams sky{shading::sun_direction(40.0, 50.0), 3.0};
    const auto furnace =
        testing::furnace_check(kPtFurnaceResolution, kPtFurnaceSpp, kPtFurnaceBounces, 0.8, 3);
    const auto direct = testing::direct_light_check(checker_maps(8, 0.3f), sky, 32);
    const double ratio = testing::variance_ratio(checker_maps(8, 0.04f), sky, 16, 8, 24);
    const bool threads = testing::thread_count_invariant(checker_maps(8, 0.04f), sky, 20, 4, 99);

    const bool furnace_ok = furnace.max_rel_error <= kPtFurnaceTolerance;
    const bool direct_ok = direct.max_rel_error <= kDirectTolerance && direct.lit_pixels > 0;
    const bool ratio_ok = ratio >= kVarianceLo && ratio <= kVarianceHi;
    return {furnace_ok && direct_ok && ratio_ok && threads,
            fmt("furnace[%s] worst_pixel=%.4f (tol %.2f, %d spp, %d bounces) mean=%+.4f p95=%.4f within_2pct=%.1f%% "
                "| direct[%s] max_rel=%.2e over %d lit px | variance_ratio[%s]=%.3f in [%.2f, %.2f] "
                "| thread_invariant[%s]",
                furnace_ok ? "ok" : "FAIL", furnace.max_rel_error, kPtFurnaceTolerance, kPtFurnaceSpp,
                kPtFurnaceBounces, furnace.mean_rel_error, furnace.p95_rel_error,
                100.0 * furnace.fraction_within_2pct, direct_ok ? "ok" : "FAIL", direct.max_rel_error,
                direct.lit_pixels, ratio_ok ? "ok" : "FAIL", ratio, kVarianceLo, kVarianceHi,
                threads ? "ok" : "FAIL")};
}

// architecture-fidelity -----------------------------------------------------

Outcome architecture_fidelity(Context&)
{
    const auto c = neural::NetworkConfig::full_scale();
    neural::validate(c);
    const auto m = neural::build_network(c, 1);
    dataset::LightCondition light{shading::sun_direction(30.0, 40.0), 3.0};
    const auto lv = neural::light_vector(light, c.light_turbidity);
    const auto lights = neural::Tensor::from_data({1, lv.size()}, lv);
    const auto embed = neural::light_embedding(m, lights).shape();
    const auto map = neural::encode_light(m, lights);
    const auto& shape = map.shape();

    // Every replicated channel must be the same 25x25 slice.
    bool identical = true;
    const std::size_t plane = 25 * 25;
    for (std::size_t ch = 1; ch < 128 && identical; ++ch)
        identical = std::equal(map.data().begin(), map.data().begin() + plane, map.data().begin() + ch * plane);

    const auto& enc_last = m.param("enc." + std::to_string(c.depth() - 1) + ".conv.weight").shape();
    const auto& dec_first = m.param("dec.0.deconv.weight").shape();
    const bool ok = c.resolution == 400 && c.bottleneck() == 25 && embed == tensor::Shape{1, 625}
                    && shape == tensor::Shape{1, 128, 25, 25} && identical && enc_last[0] == 128
                    && dec_first[0] == 128 + 128;
    return {ok, fmt("R=%d D=%d bottleneck=%dx%d light_embed=%zu replicated=%zux%zux%zu identical_slices=%s "
                    "encoder_out=%zu decoder_in=%zu",
                    c.resolution, c.depth(), c.bottleneck(), c.bottleneck(), embed[1], shape[1], shape[2], shape[3],
                    identical ? "yes" : "no", enc_last[0], dec_first[0])};
}

// loss-identities -----------------------------------------------------------

Outcome loss_identities(Context&)
{
    const auto fx = neural::FeatureExtractor::seeded(9);
    double worst_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const auto y = testing::random_tensor<float>({2, 3, 32, 32}, rng, false, 0.0, 1.0);
        const auto t = testing::random_tensor<float>({2, 3, 32, 32}, rng, false, 0.0, 1.0);
        const auto loss = neural::composite_loss(y, t, fx);
        const double sum = double(neural::l1_loss(y, t).item()) + neural::feature_loss(y, t, fx).item();
        worst_sum = std::max(worst_sum, std::abs(loss.total.item() - sum));
    }
    const auto id = neural::FeatureExtractor::identity();
    const auto a = neural::Tensor::full({1, 3, 2, 2}, 0.5f);
    const auto b = neural::Tensor::full({1, 3, 2, 2}, 0.6f);
    const double feat = neural::feature_loss(a, b, id).item();
    const double total = neural::composite_loss(a, b, id).total.item();
    const bool ok = worst_sum <= kLossTolerance && std::abs(feat - 0.01) <= kLossTolerance
                    && std::abs(total - 0.11) <= kLossTolerance;
    return {ok, fmt("composite-(l1+feature) max=%.2e over 10 cases | identity offset 0.1: feature=%.9f (0.01) "
                    "total=%.9f (0.11) tol=%.0e",
                    worst_sum, feat, total, kLossTolerance)};
}

// overfit-sanity ------------------------------------------------------------

Outcome overfit_sanity(Context& ctx)
{
    Stopwatch sw;
    dataset::DatasetConfig dc;
    dc.n_maps = 2;
    dc.lights_per_map = 4;
    dc.test_count = 0;
    dc.seed = 1;
    const auto root = ctx.work / "overfit";
    const auto m = dataset::build_dataset(dc, root);
    const neural::NetworkConfig nc;
    const auto samples = neural::load_samples(root, m, false, nc);
    neural::TrainConfig tc;
    tc.batch = 8;
    tc.epochs = kOverfitSteps;
    tc.max_steps = kOverfitSteps;
    tc.adam.lr = 1e-2f;
    int steps = 0;
    double last_train = 0.0;
    auto model = neural::train(samples, nc, tc, neural::FeatureExtractor::seeded(1),
                               {{}, [&](const neural::LogRecord& r) {
                                    ++steps;
                                    last_train = r.l1;
                                }});
    std::vector<std::size_t> all(samples.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = i;
    const auto batch = neural::make_batch(samples, all);
    tensor::NoGradGuard guard;
    const auto y = neural::forward(model, batch.gbuffers, batch.lights, tensor::NormMode::Eval);
    const double l1 = neural::l1_loss(y, batch.targets).item();
    const double s = sw.elapsed_ms() / 1000.0;
    return {samples.size() == 8 && steps == kOverfitSteps && l1 < kOverfitL1 && s < kOverfitBudgetS,
            fmt("samples=%zu R=%d steps=%d eval_l1=%.4f last_train_l1=%.4f threshold=%.2f runtime=%.0fs budget=%.0fs",
                samples.size(), nc.resolution, steps, l1, last_train, kOverfitL1, s, kOverfitBudgetS)};
}

// desk-scale-learning -------------------------------------------------------

Outcome desk_scale_learning(Context& ctx)
{
    Stopwatch sw;
    dataset::DatasetConfig dc;
    dc.n_maps = kDeskMaps;
    dc.lights_per_map = kDeskLights;
    dc.sv_fraction = 0.5;
    dc.seed = 11;
    const auto root = ctx.work / "desk";
    const auto manifest = dataset::build_dataset(dc, root);
    const double gen_s = sw.elapsed_ms() / 1000.0;

    const auto nc = neural::NetworkConfig::desk_scale();
    const auto samples = neural::load_samples(root, manifest, false, nc);
    neural::TrainConfig tc;
    tc.batch = kDeskBatch;
    tc.epochs = kDeskEpochs;
    tc.adam.lr = kDeskLr;
    tc.seed = 1;
    const auto fx = neural::FeatureExtractor::seeded(tc.feature_seed);
    ctx.desk_model = neural::train(samples, nc, tc, fx, {root / "model", {}});
    const double train_s = sw.elapsed_ms() / 1000.0 - gen_s;

    const auto neural_report = eval::evaluate(*ctx.desk_model, root, manifest, fx);
    const auto base_report = eval::evaluate(
        [&](const render::GBuffer& g, const dataset::LightCondition&, const dataset::Entry&) {
            return eval::diffuse_baseline(g, dc.exposure);
        },
        root, manifest, fx, nc.resolution);
    int wins = 0;
    for (std::size_t i = 0; i < neural_report.samples.size(); ++i)
        wins += neural_report.samples[i].psnr > base_report.samples[i].psnr;
    const double margin = neural_report.psnr - base_report.psnr;
    const double s = sw.elapsed_ms() / 1000.0;
    return {margin >= kDeskMarginDb && s <= kDeskBudgetS,
            fmt("maps=%d lights=%d train=%zu test=%zu epochs=%d | neural psnr=%.2f ssim=%.3f | baseline psnr=%.2f "
                "ssim=%.3f | margin=%+.2f dB (need >= %.1f) wins=%d/%zu | gen=%.0fs train=%.0fs total=%.0fs",
                kDeskMaps, kDeskLights, samples.size(), neural_report.samples.size(), kDeskEpochs,
                neural_report.psnr, neural_report.ssim, base_report.psnr, base_report.ssim, margin, kDeskMarginDb,
                wins, neural_report.samples.size(), gen_s, train_s, s)};
}

// light-controllability -----------------------------------------------------

Outcome light_controllability(Context& ctx)
{
    if (!ctx.desk_model)
        return {false, "no trained desk-scale model: " + ctx.desk_problem};
    const auto& model = *ctx.desk_model;
    const int R = model.config.resolution;
    auto render_at = [&](const render::GBuffer& g, double az) {
        const dataset::LightCondition l{shading::sun_direction(az, kProbeElevationDeg), kProbeTurbidity};
        return std::pair{neural::infer(model, g, l), l};
    };
    int tracked = 0;
    double mad_sum = 0.0, mad_min = 1e9;
    std::ostringstream misses;
    for (int i = 0; i < kProbeMaterials; ++i) {
        const auto g = render::rasterize_gbuffer(testing::probe_material(i, R), R);
        bool ok = true;
        for (double az : {90.0, 270.0}) {
            const auto [img, light] = render_at(g, az);
            const auto p = testing::probe_sectors(img, light.sun_dir);
            if (p.error_deg > kProbeSectorToleranceDeg) {
                ok = false;
                misses << " " << i << "@" << int(az) << "(" << int(p.brightest_deg) << "vs" << int(p.sun_deg) << ")";
            }
        }
        tracked += ok;
        const auto a = render_at(g, 90.0).first, b = render_at(g, 180.0).first;
        double mad = 0.0;
        for (std::size_t k = 0; k < a.pixels.size(); ++k)
            mad += std::abs(a.pixels[k] - b.pixels[k]);
        mad /= double(a.pixels.size());
        mad_sum += mad;
        mad_min = std::min(mad_min, mad);
    }
    const double fraction = double(tracked) / kProbeMaterials;
    const double mad_mean = mad_sum / kProbeMaterials;
    return {fraction >= kProbeTrackFraction && mad_mean > kAzimuthChangeMad,
            fmt("tracked=%d/%d (need %.0f%%, sector tol %.0fdeg) | az 90->180 mean_abs_diff=%.4f min=%.4f "
                "(need > %.2f) | misses:%s",
                tracked, kProbeMaterials, 100.0 * kProbeTrackFraction, kProbeSectorToleranceDeg, mad_mean, mad_min,
                kAzimuthChangeMad, misses.str().empty() ? " none" : misses.str().c_str())};
}

// determinism ---------------------------------------------------------------

bool same_tree(const fs::path& a, const fs::path& b, std::string& why)
{
    std::set<fs::path> files;
    for (const auto& root : {a, b})
        for (const auto& e : fs::recursive_directory_iterator(root))
            if (e.is_regular_file())
                files.insert(fs::relative(e.path(), root));
    for (const auto& rel : files) {
        if (!fs::exists(a / rel) || !fs::exists(b / rel) || read_file(a / rel) != read_file(b / rel)) {
            why = rel.string();
            return false;
        }
    }
    return !files.empty();
}

int cli(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = service::run_cli(args, out, err);
    if (code != 0)
        throw Error("matforge " + args[0] + " failed: " + err.str());
    return code;
}

Outcome determinism(Context& ctx)
{
    const auto dir = ctx.work / "determinism";
    fs::remove_all(dir);
    std::string why;

    const std::vector<std::string> gen{"--maps", "4", "--lights", "3", "--seed", "21", "--spp", "8", "--render-res",
                                       "32", "--map-res", "32", "--threads", "0"};
    for (const char* run : {"gen_a", "gen_b"}) {
        auto args = gen;
        args.insert(args.begin(), "gen-dataset");
        args.insert(args.end(), {"--out", (dir / run).string()});
        cli(args);
    }
    const bool gen_ok = same_tree(dir / "gen_a", dir / "gen_b", why);
    const std::string gen_why = why;

    // Training is single threaded; the log carries wall-clock times, so only
    // the checkpoints are compared.
    for (const char* run : {"train_a", "train_b"})
        cli({"train", "--dataset", (dir / "gen_a").string(), "--out", (dir / run).string(), "--seed", "5", "--epochs",
             "2", "--batch", "2", "--widths", "8,8,8", "--light-channels", "4"});
    bool train_ok = true;
    for (const char* f : {"epoch_000.mfck", "epoch_001.mfck", "model.mfck", "model.mfck.json"})
        train_ok = train_ok && read_file(dir / "train_a" / f) == read_file(dir / "train_b" / f);

    for (const char* run : {"gt_a.png", "gt_b.png", "gt_c.png"})
        cli({"render-gt", "--preset", "procedural-2", "--seed", "9", "--spp", "16", "--resolution", "48", "--threads",
             std::string(run) == "gt_c.png" ? "1" : "0", "--out", (dir / run).string()});
    const auto gt = read_file(dir / "gt_a.png");
    const bool gt_ok = gt == read_file(dir / "gt_b.png") && gt == read_file(dir / "gt_c.png");

    return {gen_ok && train_ok && gt_ok,
            fmt("gen-dataset[%s]%s | train[%s] checkpoints of 2 epochs | render-gt[%s] 2 runs + 1 single-thread run",
                gen_ok ? "identical" : "DIFFERS", gen_ok ? "" : (" at " + gen_why).c_str(),
                train_ok ? "identical" : "DIFFERS", gt_ok ? "identical" : "DIFFERS")};
}

// latency-accounting --------------------------------------------------------

Outcome latency_accounting(Context& ctx)
{
    if (!ctx.desk_model)
        return {false, "no trained desk-scale model: " + ctx.desk_problem};
    eval::BenchInput in;
    in.maps = testing::probe_material(1, 64);
    in.light = {shading::sun_direction(120.0, 35.0), 3.0};
    in.resolution = ctx.desk_model->config.resolution;
    in.spp = 64;
    const auto nn = eval::bench_neural(*ctx.desk_model, in, kBenchRepeats);
    const auto ref = eval::bench_reference(in, kBenchRepeats);

    // The CLI must surface the same split.
    const auto ckpt = ctx.work / "desk" / "model" / "model.mfck";
    std::ostringstream out, err;
    const int code = service::run_cli({"bench", "--checkpoint", ckpt.string(), "--seed", "1", "--repeats", "3",
                                       "--spp", "4", "--engine", "both"},
                                      out, err);
    const std::string text = out.str();
    const bool cli_split = code == 0 && text.find("preprocess_ms") != std::string::npos
                           && text.find("inference_ms") != std::string::npos;

    auto consistent = [](const eval::RuntimeRow& r) {
        return r.preprocess_ms > 0.0 && r.inference_ms > 0.0
               && std::abs(r.preprocess_ms + r.inference_ms - r.total_ms) <= 0.05 * r.total_ms + 0.5;
    };
    const bool ok = nn.total_ms < kInferenceBudgetMs && consistent(nn) && consistent(ref) && cli_split;
    return {ok, fmt("neural R=%d: preprocess=%.1fms inference=%.1fms total=%.1fms (budget %.0fms) | reference "
                    "%d spp: preprocess=%.2fms trace=%.1fms total=%.1fms | split sums to total: %s | cli split: %s",
                    in.resolution, nn.preprocess_ms, nn.inference_ms, nn.total_ms, kInferenceBudgetMs, in.spp,
                    ref.preprocess_ms, ref.inference_ms, ref.total_ms,
                    consistent(nn) && consistent(ref) ? "yes" : "no", cli_split ? "yes" : "no")};
}

struct Criterion {
    std::string name;
    std::function<Outcome(Context&)> run;
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"matforge acceptance suite"};
    std::string work = (fs::temp_directory_path() / "matforge-acceptance").string();
    std::vector<std::string> only, expect_fail;
    bool keep = false;
    app.add_option("--work-dir", work, "Scratch directory for datasets and checkpoints");
    app.add_option("--only", only, "Run only these criteria");
    app.add_option("--expect-fail", expect_fail, "Criteria known to fail; they do not change the exit status");
    app.add_flag("--keep", keep, "Keep the scratch directory");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{
        {"gradient-correctness", gradient_correctness},
        {"brdf-physics", brdf_physics},
        {"path-tracer-correctness", path_tracer_correctness},
        {"architecture-fidelity", architecture_fidelity},
        {"loss-identities", loss_identities},
        {"overfit-sanity", overfit_sanity},
        {"desk-scale-learning", desk_scale_learning},
        {"light-controllability", light_controllability},
        {"determinism", determinism},
        {"latency-accounting", latency_accounting},
    };
    for (const auto& name : only)
        if (std::none_of(criteria.begin(), criteria.end(), [&](const auto& c) { return c.name == name; })) {
            std::fprintf(stderr, "unknown criterion: %s\n", name.c_str());
            return 2;
        }

    Context ctx;
    ctx.work = work;
    ctx.desk_problem = "desk-scale-learning did not run";
    fs::remove_all(ctx.work);
    fs::create_directories(ctx.work);

    const std::set<std::string> selected(only.begin(), only.end());
    const std::set<std::string> expected(expect_fail.begin(), expect_fail.end());
    int passed = 0, failed = 0, unexpected = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.name))
            continue;
        Stopwatch sw;
        Outcome o;
        try {
            o = c.run(ctx);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
            if (c.name == "desk-scale-learning")
                ctx.desk_problem = e.what();
        }
        const bool known = expected.count(c.name) > 0;
        std::printf("%s %-24s %s [%.1fs]%s\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(),
                    sw.elapsed_ms() / 1000.0, !o.pass && known ? " (expected)" : "");
        std::fflush(stdout);
        o.pass ? ++passed : ++failed;
        unexpected += !o.pass && !known;
    }
    std::printf("acceptance: %d passed, %d failed (%d unexpected)\n", passed, failed, unexpected);
    if (!keep)
        fs::remove_all(ctx.work);
    return unexpected == 0 ? 0 : 1;
}
