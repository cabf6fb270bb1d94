#include "matforge/service/cli.hpp"

#include "matforge/core/error.hpp"
#include "matforge/core/png_io.hpp"
#include "matforge/dataset/dataset.hpp"
#include "matforge/dataset/svbrdf_io.hpp"
#include "matforge/eval/report.hpp"
#include "matforge/neural/train.hpp"
#include "matforge/render/path_tracer.hpp"
#include "matforge/service/http.hpp"
#include "matforge/service/render_service.hpp"
#include "matforge/tensor/checkpoint.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>

namespace matforge::service {

namespace fs = std::filesystem;

namespace {


class UsageError : public Error {
public:
    using Error::Error;
};

std::string env_checkpoint()
{
    const char* v = std::getenv("MATFORGE_CHECKPOINT");
    return v ? v : "";
}

// Material chosen on the command line: a map set from a directory, a
// built-in preset, or uniform values.
struct MaterialArgs {
    std::string maps_dir;
    std::string name;
    std::string preset;
    std::vector<double> diffuse{0.5, 0.5, 0.5};
    std::vector<double> specular{0.04, 0.04, 0.04};
    double roughness = 0.5;

    void add(CLI::App* app)
    {
        app->add_option("--maps-dir", maps_dir, "Directory of <name>_{diffuse,specular,roughness,normal}.png");
        app->add_option("--material", name, "Material name inside --maps-dir");
        app->add_option("--preset", preset, "Built-in preset (see `serve` /presets)");
        app->add_option("--diffuse", diffuse, "Uniform diffuse r g b (space or comma separated)")
            ->expected(3)
            ->delimiter(',')
            ->check(CLI::Range(0.0, 1.0));
        app->add_option("--specular", specular, "Uniform specular r g b (space or comma separated)")
            ->expected(3)
            ->delimiter(',')
            ->check(CLI::Range(0.0, 1.0));
        app->add_option("--roughness", roughness, "Uniform roughness")->check(CLI::Range(0.05, 1.0));
    }

    render::MaterialMaps load() const
    {
        if (!maps_dir.empty()) {
            if (name.empty())
                throw UsageError("--maps-dir needs --material");
            return dataset::load_material(maps_dir, name);
        }
        if (!preset.empty()) {
            for (auto& p : builtin_presets())
                if (p.name == preset)
                    return p.maps;
            throw ValueError("unknown preset '" + preset + "'");
        }
        return render::MaterialMaps::uniform(4, {diffuse[0], diffuse[1], diffuse[2]},
                                             {specular[0], specular[1], specular[2]}, roughness);
    }
};

struct LightArgs {
    double azimuth = 45.0;
    double elevation = 45.0;
    double turbidity = 3.0;

    void add(CLI::App* app)
    {
        app->add_option("--azimuth", azimuth, "Sun azimuth, degrees")->check(CLI::Range(-360.0, 360.0));
        app->add_option("--elevation", elevation, "Sun elevation, degrees in (0, 90]")->check(CLI::Range(0.0, 90.0));
        app->add_option("--turbidity", turbidity, "Sky turbidity")->check(CLI::Range(1.7, 10.0));
    }

    dataset::LightCondition light() const
    {
        if (!(elevation > 0.0))
            throw ValueError("--elevation must be > 0");
        return {shading::sun_direction(azimuth, elevation), turbidity};
    }
};

neural::FeatureExtractor feature_extractor(const std::string& weights, std::uint64_t seed)
{
    if (!weights.empty())
        return neural::FeatureExtractor::from_records(tensor::load_checkpoint(weights));
    return neural::FeatureExtractor::seeded(seed);
}

void write_text(const fs::path& path, const std::string& text)
{
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

neural::Model load_checkpoint_arg(const std::string& path)
{
    if (path.empty())
        throw UsageError("--checkpoint is required (or set MATFORGE_CHECKPOINT)");
    return neural::load_model(path);
}

std::string one_line(std::string msg)
{
    for (char& c : msg)
        if (c == '\n' || c == '\r')
            c = ' ';
    return msg;
}

std::string row_line(const eval::RuntimeRow& r)
{
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-9s preprocess_ms=%.3f inference_ms=%.3f total_ms=%.3f repeats=%d",
                  r.pipeline.c_str(), r.preprocess_ms, r.inference_ms, r.total_ms, r.repeats);
    return buf;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"matforge: material rendering by path tracing and a neural renderer"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");
    std::function<void()> action;

    // gen-dataset
    dataset::DatasetConfig dc;
    std::string ds_out;
    auto* gen = app.add_subcommand("gen-dataset", "Generate maps, light conditions and ground-truth renders");
    gen->add_option("--maps", dc.n_maps, "Number of parameter maps")->check(CLI::PositiveNumber);
    gen->add_option("--lights", dc.lights_per_map, "Light conditions per map")->check(CLI::PositiveNumber);
    gen->add_option("--seed", dc.seed, "Global seed")->required();
    gen->add_option("--out", ds_out, "Output directory")->required();
    gen->add_option("--sv-fraction", dc.sv_fraction, "Fraction of spatially varying maps")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--spp", dc.spp, "Samples per pixel")->check(CLI::PositiveNumber);
    gen->add_option("--map-res", dc.map_resolution, "Parameter map size")->check(CLI::PositiveNumber);
    gen->add_option("--render-res", dc.render_resolution, "Render resolution")->check(CLI::PositiveNumber);
    gen->add_option("--bounces", dc.max_bounces, "Maximum path length")->check(CLI::PositiveNumber);
    gen->add_option("--test-count", dc.test_count, "Entries in the test split (-1: 2%)");
    gen->add_option("--threads", dc.threads, "Worker threads (0: all cores)");
    gen->callback([&] {
        action = [&] {
            const auto m = dataset::build_dataset(dc, ds_out);
            out << "wrote " << m.entries.size() << " entries (" << m.maps.size() << " maps, " << m.count(false)
                << " train, " << m.count(true) << " test) to " << ds_out << "\n";
        };
    });

    // render-gt
    MaterialArgs gt_mat;
    LightArgs gt_light;
    render::TraceOptions gt_opts;
    gt_opts.indirect_clamp = 10.0;
    std::uint64_t gt_seed = 0;
    std::string gt_out, gt_hdr;
    double gt_exposure = render::kDefaultExposure;
    auto* rgt = app.add_subcommand("render-gt", "Path-trace the shaderball");
    gt_mat.add(rgt);
    gt_light.add(rgt);
    rgt->add_option("--spp", gt_opts.spp, "Samples per pixel")->check(CLI::PositiveNumber);
    rgt->add_option("--resolution", gt_opts.resolution, "Image size")->check(CLI::PositiveNumber);
    rgt->add_option("--bounces", gt_opts.max_bounces, "Maximum path length")->check(CLI::PositiveNumber);
    rgt->add_option("--clamp", gt_opts.indirect_clamp, "Indirect firefly clamp (0: off)")->check(CLI::NonNegativeNumber);
    rgt->add_option("--exposure", gt_exposure, "Tonemap exposure")->check(CLI::PositiveNumber);
    rgt->add_option("--seed", gt_seed, "Sampler seed")->required();
    rgt->add_option("--threads", gt_opts.threads, "Worker threads (0: all cores)");
    rgt->add_option("--out", gt_out, "Output PNG")->required();
    rgt->add_option("--hdr", gt_hdr, "Also write linear radiance (MFHD)");
    rgt->callback([&] {
        action = [&] {
            gt_opts.seed = gt_seed;
            const auto maps = gt_mat.load();
            const auto hdr = render::path_trace(maps, gt_light.light().sky(), gt_opts);
            write_png(gt_out, render::to_image8(render::tonemap(hdr, gt_exposure)));
            if (!gt_hdr.empty())
                render::write_hdr(gt_hdr, hdr);
            out << "wrote " << gt_out << "\n";
        };
    });

    // train
    std::string tr_data, tr_out, tr_fx_weights;
    neural::TrainConfig tc;
    neural::NetworkConfig nc;
    bool no_skip = false, three_input = false;
    std::uint64_t fx_seed = 0x5EED;
    auto* tr = app.add_subcommand("train", "Train the neural renderer on a dataset's train split");
    tr->add_option("--dataset", tr_data, "Dataset directory")->required();
    tr->add_option("--out", tr_out, "Output directory (checkpoints, log)")->required();
    tr->add_option("--seed", tc.seed, "Initialization and shuffling seed")->required();
    tr->add_option("--epochs", tc.epochs, "Epochs")->check(CLI::PositiveNumber);
    tr->add_option("--batch", tc.batch, "Batch size (>= 2)")->check(CLI::Range(2, 1 << 20));
    tr->add_option("--lr", tc.adam.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    tr->add_option("--beta1", tc.adam.beta1, "Adam beta1")->check(CLI::Range(0.0, 0.999999));
    tr->add_option("--beta2", tc.adam.beta2, "Adam beta2")->check(CLI::Range(0.0, 0.999999));
    tr->add_option("--max-steps", tc.max_steps, "Stop after this many steps (0: no cap)")->check(CLI::NonNegativeNumber);
    tr->add_flag("--cosine-decay", tc.cosine_decay, "Anneal the learning rate to 0 over the run");
    tr->add_option("--widths", nc.widths, "Encoder stage widths")->delimiter(',');
    tr->add_option("--light-channels", nc.light_channels, "Light feature channels M")->check(CLI::PositiveNumber);
    tr->add_option("--light-hidden", nc.light_hidden, "Light encoder hidden widths")->delimiter(',');
    tr->add_flag("--no-skip", no_skip, "Ablate the skip connections");
    tr->add_flag("--three-input", three_input, "Light input is the sun direction only");
    tr->add_option("--fx-seed", fx_seed, "Seed of the frozen feature extractor");
    tr->add_option("--fx-weights", tr_fx_weights, "Feature extractor weights (fx.<k>.weight/bias checkpoint)");
    tr->callback([&] {
        action = [&] {
            const auto manifest = dataset::read_manifest(fs::path(tr_data) / "manifest.json");
            nc.resolution = manifest.config.render_resolution;
            nc.skip_connections = !no_skip;
            nc.light_turbidity = !three_input;
            neural::validate(nc);
            neural::validate(tc);
            const auto fx = feature_extractor(tr_fx_weights, fx_seed);
            const auto samples = neural::load_samples(tr_data, manifest, false, nc);
            out << "training on " << samples.size() << " samples\n";
            neural::TrainOutput to;
            to.dir = tr_out;
            to.on_batch = [&](const neural::LogRecord& r) {
                if (r.batch == 0)
                    out << "epoch " << r.epoch << " l1=" << r.l1 << " feat=" << r.feature << "\n" << std::flush;
            };
            neural::train(samples, nc, tc, fx, to);
            out << "wrote " << (fs::path(tr_out) / "model.mfck").string() << "\n";
        };
    });

    // infer
    std::string inf_ckpt = env_checkpoint(), inf_out;
    MaterialArgs inf_mat;
    LightArgs inf_light;
    auto* inf = app.add_subcommand("infer", "Render with a trained network");
    inf->add_option("--checkpoint", inf_ckpt, "Model checkpoint (default: $MATFORGE_CHECKPOINT)");
    inf_mat.add(inf);
    inf_light.add(inf);
    inf->add_option("--out", inf_out, "Output PNG")->required();
    inf->callback([&] {
        action = [&] {
            const auto model = load_checkpoint_arg(inf_ckpt);
            const auto g = render::rasterize_gbuffer(inf_mat.load(), model.config.resolution);
            write_png(inf_out, render::to_image8(neural::infer(model, g, inf_light.light())));
            out << "wrote " << inf_out << "\n";
        };
    });

    // eval
    std::string ev_ckpt = env_checkpoint(), ev_data, ev_out, ev_csv, ev_fx_weights;
    std::uint64_t ev_fx_seed = 0x5EED;
    auto* ev = app.add_subcommand("eval", "Score a network on a dataset's test split");
    ev->add_option("--checkpoint", ev_ckpt, "Model checkpoint (default: $MATFORGE_CHECKPOINT)");
    ev->add_option("--dataset", ev_data, "Dataset directory")->required();
    ev->add_option("--out", ev_out, "Report JSON");
    ev->add_option("--csv", ev_csv, "Report CSV");
    ev->add_option("--fx-seed", ev_fx_seed, "Seed of the frozen feature extractor");
    ev->add_option("--fx-weights", ev_fx_weights, "Feature extractor weights");
    bool ev_baseline = false;
    ev->add_flag("--baseline", ev_baseline, "Also score the tonemapped diffuse-albedo baseline");
    ev->callback([&] {
        action = [&] {
            const auto model = load_checkpoint_arg(ev_ckpt);
            const auto manifest = dataset::read_manifest(fs::path(ev_data) / "manifest.json");
            const auto fx = feature_extractor(ev_fx_weights, ev_fx_seed);
            const auto report = eval::evaluate(model, ev_data, manifest, fx);
            if (!ev_out.empty())
                write_text(ev_out, eval::to_json(report));
            if (!ev_csv.empty())
                write_text(ev_csv, eval::to_csv(report));
            out << "psnr=" << report.psnr << " ssim=" << report.ssim << " samples=" << report.samples.size();
            if (ev_baseline) {
                const auto base = eval::evaluate(
                    [&](const render::GBuffer& g, const dataset::LightCondition&, const dataset::Entry&) {
                        return eval::diffuse_baseline(g, manifest.config.exposure);
                    },
                    ev_data, manifest, fx, model.config.resolution);
                out << " baseline_psnr=" << base.psnr << " baseline_ssim=" << base.ssim;
            }
            out << "\n";
        };
    });

    // bench
    std::string b_ckpt = env_checkpoint(), b_engine = "both", b_out;
    MaterialArgs b_mat;
    b_mat.preset = "procedural-1";
    LightArgs b_light;
    eval::BenchInput b_in;
    int b_repeats = 5;
    auto* bench = app.add_subcommand("bench", "Time the neural and reference pipelines");
    bench->add_option("--engine", b_engine, "neural, reference or both")
        ->check(CLI::IsMember({"neural", "reference", "both"}));
    bench->add_option("--checkpoint", b_ckpt, "Model checkpoint (default: $MATFORGE_CHECKPOINT)");
    b_mat.add(bench);
    b_light.add(bench);
    bench->add_option("--resolution", b_in.resolution, "Reference resolution (neural uses the network's)")
        ->check(CLI::PositiveNumber);
    bench->add_option("--spp", b_in.spp, "Reference samples per pixel")->check(CLI::PositiveNumber);
    bench->add_option("--repeats", b_repeats, "Repeats (>= 3); the median is reported")->check(CLI::Range(3, 100000));
    bench->add_option("--seed", b_in.seed, "Sampler seed")->required();
    bench->add_option("--threads", b_in.threads, "Worker threads (0: all cores)");
    bench->add_option("--out", b_out, "Rows as JSON");
    bench->callback([&] {
        action = [&] {
            b_in.maps = b_mat.load();
            b_in.light = b_light.light();
            std::vector<eval::RuntimeRow> rows;
            if (b_engine != "reference") {
                const auto model = load_checkpoint_arg(b_ckpt);
                auto in = b_in;
                in.resolution = model.config.resolution;
                rows.push_back(eval::bench_neural(model, in, b_repeats));
            }
            if (b_engine != "neural")
                rows.push_back(eval::bench_reference(b_in, b_repeats));
            nlohmann::json j = nlohmann::json::array();
            for (const auto& r : rows) {
                out << row_line(r) << "\n";
                j.push_back({{"pipeline", r.pipeline},
                             {"preprocess_ms", r.preprocess_ms},
                             {"inference_ms", r.inference_ms},
                             {"total_ms", r.total_ms},
                             {"repeats", r.repeats}});
            }
            if (!b_out.empty())
                write_text(b_out, j.dump(2) + "\n");
        };
    });

    // serve
    ServiceConfig sc;
    std::string s_ckpt = env_checkpoint(), s_host = "127.0.0.1", s_presets;
    int s_port = 8080;
    auto* srv = app.add_subcommand("serve", "HTTP API for the interactive editor");
    srv->add_option("--checkpoint", s_ckpt, "Model checkpoint (default: $MATFORGE_CHECKPOINT; optional)");
    srv->add_option("--host", s_host, "Bind address");
    srv->add_option("--port", s_port, "Port")->check(CLI::Range(1, 65535));
    srv->add_option("--max-spp", sc.max_spp, "Reference spp budget (429 above)")->check(CLI::PositiveNumber);
    srv->add_option("--max-resolution", sc.max_resolution, "Largest accepted resolution")->check(CLI::Range(8, 4096));
    srv->add_option("--presets-dir", s_presets, "Extra presets in the map exchange format");
    srv->add_option("--threads", sc.threads, "Reference render threads (0: all cores)");
    srv->callback([&] {
        action = [&] {
            sc.checkpoint = s_ckpt;
            sc.presets_dir = s_presets;
            const RenderService service(sc);
            serve(service, s_host, s_port);
        };
    });

    std::vector<const char*> argv{"matforge"};
    for (const auto& a : args)
        argv.push_back(a.c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: usage: " << one_line(e.what()) << "\n";
        return kExitUsage;
    }

    try {
        if (action)
            action();
        return kExitOk;
    } catch (const UsageError& e) {
        err << "error: usage: " << one_line(e.what()) << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error: io: " << one_line(e.what()) << "\n";
        return kExitIo;
    } catch (const ValueError& e) {
        err << "error: value: " << one_line(e.what()) << "\n";
        return kExitValue;
    } catch (const ShapeError& e) {
        err << "error: value: " << one_line(e.what()) << "\n";
        return kExitValue;
    } catch (const std::exception& e) {
        err << "error: internal: " << one_line(e.what()) << "\n";
        return kExitInternal;
    }
}

} // namespace matforge::service
