#include "matforge/dataset/dataset.hpp"

#include "matforge/core/error.hpp"
#include "matforge/core/png_io.hpp"
#include "matforge/core/rng.hpp"
#include "matforge/dataset/generate.hpp"
#include "matforge/dataset/svbrdf_io.hpp"
#include "matforge/render/path_tracer.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <system_error>

namespace matforge::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

// Sub-stream ids under the global seed.
enum Stream : std::uint64_t { kMapSeed = 1, kLightSeed, kRenderSeed, kSplit, kKind };

std::string map_id(int i)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "m%05d", i);
    return buf;
}

// The first `k` elements of a seeded Fisher-Yates shuffle of 0..n-1.
std::vector<std::size_t> choose(std::size_t n, std::size_t k, std::uint64_t seed)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < k; ++i)
        std::swap(idx[i], idx[i + rng.below(n - i)]);
    idx.resize(k);
    return idx;
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create directory " + dir.string() + (ec ? ": " + ec.message() : ""));
    // create_directories succeeds on an existing read-only directory, so
    // probe for write access explicitly.
    const fs::path probe = dir / ".matforge-write-probe";
    {
        std::ofstream f(probe);
        if (!f)
            throw IoError("directory is not writable: " + dir.string());
    }
    fs::remove(probe, ec);
}

json config_to_json(const DatasetConfig& c)
{
    return {{"n_maps", c.n_maps},
            {"sv_fraction", c.sv_fraction},
            {"lights_per_map", c.lights_per_map},
            {"spp", c.spp},
            {"map_resolution", c.map_resolution},
            {"render_resolution", c.render_resolution},
            {"max_bounces", c.max_bounces},
            {"indirect_clamp", c.indirect_clamp},
            {"exposure", c.exposure},
            {"test_count", c.test_count},
            {"seed", c.seed}};
}

DatasetConfig config_from_json(const json& j)
{
    DatasetConfig c;
    c.n_maps = j.at("n_maps").get<int>();
    c.sv_fraction = j.at("sv_fraction").get<double>();
    c.lights_per_map = j.at("lights_per_map").get<int>();
    c.spp = j.at("spp").get<int>();
    c.map_resolution = j.at("map_resolution").get<int>();
    c.render_resolution = j.at("render_resolution").get<int>();
    c.max_bounces = j.at("max_bounces").get<int>();
    c.indirect_clamp = j.at("indirect_clamp").get<double>();
    c.exposure = j.at("exposure").get<double>();
    c.test_count = j.at("test_count").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

} // namespace

LightCondition sample_light(std::uint64_t seed)
{
    Rng rng(seed);
    // Uniform on the sphere means uniform in height, so restricting height to
    // [sin 5deg, 1] keeps the direction distribution uniform on the cap.
    const double y_min = std::sin(kMinSunElevationDeg * shading::kPi / 180.0);
    const double y = rng.uniform(y_min, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * shading::kPi);
    const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    LightCondition light;
    light.sun_dir = {r * std::sin(phi), y, r * std::cos(phi)};
    light.turbidity = rng.uniform(shading::kMinTurbidity, shading::kMaxTurbidity);
    return light;
}

int resolved_test_count(const DatasetConfig& c)
{
    if (c.test_count >= 0)
        return c.test_count;
    const int n = c.n_maps * c.lights_per_map;
    return n < 2 ? 0 : std::max(1, int(std::lround(0.02 * n)));
}

void validate(const DatasetConfig& c)
{
    if (c.n_maps < 1)
        throw ValueError("n_maps must be >= 1");
    if (c.lights_per_map < 1)
        throw ValueError("lights_per_map must be >= 1");
    if (!(c.sv_fraction >= 0.0 && c.sv_fraction <= 1.0))
        throw ValueError("sv_fraction must be in [0,1]");
    if (c.spp < 1)
        throw ValueError("spp must be >= 1");
    if (c.render_resolution < 1)
        throw ValueError("render_resolution must be >= 1");
    if (c.max_bounces < 1)
        throw ValueError("max_bounces must be >= 1");
    if (!(c.exposure > 0.0))
        throw ValueError("exposure must be > 0");
    if (!(c.indirect_clamp >= 0.0))
        throw ValueError("indirect_clamp must be >= 0");
    const int sv = int(std::lround(c.n_maps * c.sv_fraction));
    if (sv > 0 && c.map_resolution < 16)
        throw ValueError("spatially varying maps need map_resolution >= 16");
    if (c.map_resolution < 1)
        throw ValueError("map_resolution must be >= 1");
    if (resolved_test_count(c) > c.n_maps * c.lights_per_map)
        throw ValueError("test_count " + std::to_string(c.test_count) + " exceeds the " +
                         std::to_string(c.n_maps * c.lights_per_map) + " entries");
}

std::size_t Manifest::count(bool test) const
{
    return std::size_t(std::count_if(entries.begin(), entries.end(), [&](const Entry& e) { return e.test == test; }));
}

Image8 render_ground_truth(const MaterialMaps& maps, const LightCondition& light, const DatasetConfig& config,
                           std::uint64_t render_seed)
{
    render::TraceOptions opts;
    opts.resolution = config.render_resolution;
    opts.spp = config.spp;
    opts.max_bounces = config.max_bounces;
    opts.indirect_clamp = config.indirect_clamp;
    opts.seed = render_seed;
    opts.threads = config.threads;
    return render::to_image8(render::tonemap(render::path_trace(maps, light.sky(), opts), config.exposure));
}

MaterialMaps load_entry_maps(const fs::path& root, const std::string& id)
{
    return load_material(root / "maps", id);
}

Manifest build_dataset(const DatasetConfig& config, const fs::path& out_dir)
{
    validate(config);
    ensure_dir(out_dir);
    ensure_dir(out_dir / "maps");
    ensure_dir(out_dir / "gt");

    Manifest manifest;
    manifest.config = config;
    manifest.config.test_count = resolved_test_count(config);

    // Which maps are spatially varying: a seeded choice of exactly
    // round(n * sv_fraction) indices.
    const auto n_sv = std::size_t(std::lround(config.n_maps * config.sv_fraction));
    std::vector<bool> sv(config.n_maps, false);
    for (std::size_t i : choose(std::size_t(config.n_maps), n_sv, derive_seed(config.seed, kKind)))
        sv[i] = true;

    for (int m = 0; m < config.n_maps; ++m) {
        MapRecord rec{map_id(m), sv[m], derive_seed(config.seed, kMapSeed, std::uint64_t(m))};
        const MaterialMaps maps = rec.spatially_varying ? gen_svbrdf_map(rec.seed, config.map_resolution)
                                                        : gen_uniform_map(rec.seed, config.map_resolution);
        export_svbrdf(out_dir / "maps", rec.id, maps);

        for (int l = 0; l < config.lights_per_map; ++l) {
            const auto index = std::uint64_t(m) * std::uint64_t(config.lights_per_map) + std::uint64_t(l);
            Entry e;
            e.map_id = rec.id;
            e.id = rec.id + "_" + std::to_string(l);
            e.light_index = l;
            e.light = sample_light(derive_seed(config.seed, kLightSeed, index));
            e.render_seed = derive_seed(config.seed, kRenderSeed, index);
            e.gt_path = "gt/" + e.id + ".png";
            try {
                write_png(out_dir / e.gt_path, render_ground_truth(maps, e.light, config, e.render_seed));
            } catch (const Error& err) {
                throw Error("rendering entry " + e.id + " failed: " + err.what());
            }
            manifest.entries.push_back(std::move(e));
        }
        manifest.maps.push_back(std::move(rec));
    }

    // Split drawn last so it never perturbs the maps or renders.
    for (std::size_t i : choose(manifest.entries.size(), std::size_t(manifest.config.test_count),
                                derive_seed(config.seed, kSplit)))
        manifest.entries[i].test = true;

    write_manifest(out_dir / "manifest.json", manifest);
    return manifest;
}

std::string manifest_to_json(const Manifest& m)
{
    json maps = json::array();
    for (const auto& r : m.maps)
        maps.push_back({{"id", r.id},
                        {"kind", r.spatially_varying ? "spatially_varying" : "uniform"},
                        {"seed", r.seed},
                        {"path", "maps/" + r.id}});
    json entries = json::array();
    for (const auto& e : m.entries) {
        const auto& d = e.light.sun_dir;
        entries.push_back({{"id", e.id},
                           {"map", e.map_id},
                           {"maps_path", "maps/" + e.map_id},
                           {"light_index", e.light_index},
                           {"light", {d.x, d.y, d.z, e.light.turbidity}},
                           {"render_seed", e.render_seed},
                           {"gt", e.gt_path},
                           {"split", e.test ? "test" : "train"}});
    }
    const json j = {{"format", "matforge-dataset"},
                    {"version", kManifestVersion},
                    {"seed", m.config.seed},
                    {"config", config_to_json(m.config)},
                    {"counts",
                     {{"maps", m.maps.size()},
                      {"entries", m.entries.size()},
                      {"train", m.count(false)},
                      {"test", m.count(true)}}},
                    {"maps", maps},
                    {"entries", entries}};
    return j.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text)
{
    try {
        const json j = json::parse(text);
        if (j.at("format") != "matforge-dataset")
            throw IoError("not a matforge dataset manifest");
        if (j.at("version").get<int>() != kManifestVersion)
            throw IoError("unsupported manifest version " + j.at("version").dump());
        Manifest m;
        m.config = config_from_json(j.at("config"));
        for (const auto& r : j.at("maps"))
            m.maps.push_back({r.at("id").get<std::string>(), r.at("kind") == "spatially_varying",
                              r.at("seed").get<std::uint64_t>()});
        for (const auto& je : j.at("entries")) {
            Entry e;
            e.id = je.at("id").get<std::string>();
            e.map_id = je.at("map").get<std::string>();
            e.light_index = je.at("light_index").get<int>();
            const auto& l = je.at("light");
            if (!l.is_array() || l.size() != 4)
                throw ValueError("entry " + e.id + ": light must be [x, y, z, c]");
            e.light.sun_dir = {l[0].get<double>(), l[1].get<double>(), l[2].get<double>()};
            e.light.turbidity = l[3].get<double>();
            e.render_seed = je.at("render_seed").get<std::uint64_t>();
            e.gt_path = je.at("gt").get<std::string>();
            const auto split = je.at("split").get<std::string>();
            if (split != "train" && split != "test")
                throw ValueError("entry " + e.id + ": split must be train or test");
            e.test = split == "test";
            m.entries.push_back(std::move(e));
        }
        return m;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed manifest: ") + e.what());
    }
}

void write_manifest(const fs::path& path, const Manifest& manifest)
{
    const std::string text = manifest_to_json(manifest);
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Manifest read_manifest(const fs::path& path)
{
    const auto bytes = read_file(path);
    return manifest_from_json(std::string(bytes.begin(), bytes.end()));
}

} // namespace matforge::dataset
