#include "matforge/service/render_service.hpp"

#include "matforge/core/png_io.hpp"
#include "matforge/core/timer.hpp"
#include "matforge/dataset/generate.hpp"
#include "matforge/render/gbuffer.hpp"
#include "matforge/render/path_tracer.hpp"

#include <json.hpp>

#include <cmath>

namespace matforge::service {

using nlohmann::json;

namespace {

constexpr double kReferenceClamp = 10.0;  // same firefly clamp as the dataset ground truth

[[noreturn]] void bad(const std::string& field, const std::string& message)
{
    throw ServiceError(400, field, message);
}

double number(const json& obj, const char* key, const std::string& field, double fallback)
{
    if (!obj.contains(key))
        return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number())
        bad(field, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d))
        bad(field, "must be finite");
    return d;
}

int integer(const json& obj, const char* key, const std::string& field, int fallback)
{
    if (!obj.contains(key))
        return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer())
        bad(field, "must be an integer");
    return v.get<int>();
}

shading::Rgb colour(const json& obj, const char* key, const std::string& field, shading::Rgb fallback)
{
    if (!obj.contains(key))
        return fallback;
    const auto& v = obj.at(key);
    if (!v.is_array() || v.size() != 3)
        bad(field, "must be an array of 3 numbers");
    double c[3];
    for (int i = 0; i < 3; ++i) {
        if (!v[i].is_number())
            bad(field, "must be an array of 3 numbers");
        c[i] = v[i].get<double>();
        if (!(c[i] >= 0.0 && c[i] <= 1.0))
            bad(field, "components must be in [0, 1]");
    }
    return {c[0], c[1], c[2]};
}

render::MaterialMaps uniform_maps(const UniformMaterial& m)
{
    return render::MaterialMaps::uniform(4, m.diffuse, m.specular, m.roughness);
}

} // namespace

dataset::LightCondition RenderRequest::light() const
{
    return {shading::sun_direction(azimuth_deg, elevation_deg), turbidity};
}

std::vector<dataset::NamedMaterial> builtin_presets(int size)
{
    using render::MaterialMaps;
    return {
        {"red-plastic", MaterialMaps::uniform(size, {0.65, 0.08, 0.06}, {0.04, 0.04, 0.04}, 0.3)},
        {"gold", MaterialMaps::uniform(size, {0.0, 0.0, 0.0}, {1.0, 0.78, 0.34}, 0.25)},
        {"chalk", MaterialMaps::uniform(size, {0.85, 0.85, 0.82}, {0.02, 0.02, 0.02}, 0.95)},
        {"procedural-1", dataset::gen_svbrdf_map(101, size)},
        {"procedural-2", dataset::gen_svbrdf_map(202, size)},
        {"procedural-3", dataset::gen_svbrdf_map(303, size)},
    };
}

RenderService::RenderService(ServiceConfig config) : RenderService(config, std::nullopt)
{
    if (!config_.checkpoint.empty())
        model_ = neural::load_model(config_.checkpoint);
}

RenderService::RenderService(ServiceConfig config, std::optional<neural::Model> model)
    : config_(std::move(config)), model_(std::move(model)), presets_(builtin_presets())
{
    if (!config_.presets_dir.empty()) {
        auto imported = dataset::import_svbrdf(config_.presets_dir);
        for (auto& m : imported.materials)
            presets_.push_back(std::move(m));
    }
}

const render::MaterialMaps& RenderService::preset(const std::string& name) const
{
    for (const auto& p : presets_)
        if (p.name == name)
            return p.maps;
    bad("material.preset", "unknown preset '" + name + "'");
}

RenderRequest RenderService::parse_request(const std::string& body) const
{
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        bad("", std::string("body is not valid JSON: ") + e.what());
    }
    if (!j.is_object())
        bad("", "body must be a JSON object");

    RenderRequest r;
    if (j.contains("engine")) {
        const auto& e = j.at("engine");
        if (e == "neural")
            r.engine = Engine::Neural;
        else if (e == "reference")
            r.engine = Engine::Reference;
        else
            bad("engine", "must be \"neural\" or \"reference\"");
    }

    if (j.contains("material")) {
        const auto& m = j.at("material");
        if (!m.is_object())
            bad("material", "must be an object");
        if (m.contains("preset")) {
            if (!m.at("preset").is_string())
                bad("material.preset", "must be a string");
            r.preset = m.at("preset").get<std::string>();
            preset(*r.preset);
        } else {
            r.uniform.diffuse = colour(m, "diffuse", "material.diffuse", r.uniform.diffuse);
            r.uniform.specular = colour(m, "specular", "material.specular", r.uniform.specular);
            r.uniform.roughness = number(m, "roughness", "material.roughness", r.uniform.roughness);
            if (!(r.uniform.roughness >= shading::kMinRoughness && r.uniform.roughness <= 1.0))
                bad("material.roughness", "must be in [0.05, 1]");
        }
    }

    if (j.contains("light")) {
        const auto& l = j.at("light");
        if (!l.is_object())
            bad("light", "must be an object");
        r.azimuth_deg = number(l, "azimuth", "light.azimuth", r.azimuth_deg);
        r.elevation_deg = number(l, "elevation", "light.elevation", r.elevation_deg);
        r.turbidity = number(l, "turbidity", "light.turbidity", r.turbidity);
    }
    if (!(r.azimuth_deg >= -360.0 && r.azimuth_deg <= 360.0))
        bad("light.azimuth", "must be in [-360, 360] degrees");
    if (!(r.elevation_deg > kMinElevationDeg && r.elevation_deg <= kMaxElevationDeg))
        bad("light.elevation", "must be in (0, 90] degrees");
    if (!(r.turbidity >= shading::kMinTurbidity && r.turbidity <= shading::kMaxTurbidity))
        bad("light.turbidity", "must be in [1.7, 10]");

    r.spp = integer(j, "spp", "spp", r.spp);
    if (r.spp < 1)
        bad("spp", "must be >= 1");
    r.resolution = integer(j, "resolution", "resolution", r.resolution);
    if (r.resolution < kMinResolution || r.resolution > config_.max_resolution)
        bad("resolution", "must be in [" + std::to_string(kMinResolution) + ", " +
                              std::to_string(config_.max_resolution) + "]");
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
            bad("seed", "must be a non-negative integer");
        if (j.at("seed").is_number_integer() && j.at("seed").get<long long>() < 0)
            bad("seed", "must be a non-negative integer");
        r.seed = j.at("seed").get<std::uint64_t>();
    }
    return r;
}

RenderResult RenderService::render(const RenderRequest& req) const
{
    RenderResult out;
    out.engine = req.engine;
    const render::MaterialMaps maps = req.preset ? preset(*req.preset) : uniform_maps(req.uniform);
    const auto light = req.light();

    if (req.engine == Engine::Neural) {
        if (!model_)
            throw ServiceError(409, "engine", "the neural engine needs the server to be started with a checkpoint");
        if (req.resolution != model_->config.resolution)
            bad("resolution", "the loaded network renders at " + std::to_string(model_->config.resolution));
        Stopwatch sw;
        const auto g = render::rasterize_gbuffer(maps, req.resolution, 1);
        out.preprocess_ms = sw.elapsed_ms();
        sw.reset();
        const auto y = neural::infer(*model_, g, light);
        out.inference_ms = sw.elapsed_ms();
        out.image = render::to_image8(y);
    } else {
        if (req.spp > config_.max_spp)
            throw ServiceError(429, "spp", "exceeds the server budget of " + std::to_string(config_.max_spp));
        Stopwatch sw;
        render::TraceOptions opts;
        opts.resolution = req.resolution;
        opts.spp = req.spp;
        opts.seed = req.seed;
        opts.threads = config_.threads;
        opts.indirect_clamp = kReferenceClamp;
        const shading::PerezSky sky(light.sky());
        out.preprocess_ms = sw.elapsed_ms();
        sw.reset();
        out.image = render::to_image8(render::tonemap(render::path_trace(maps, sky, opts)));
        out.trace_ms = sw.elapsed_ms();
    }
    out.png = encode_png(out.image);
    return out;
}

std::string RenderService::presets_json() const
{
    json list = json::array();
    for (const auto& p : presets_) {
        const bool uniform = std::all_of(p.maps.roughness.begin(), p.maps.roughness.end(),
                                         [&](float v) { return v == p.maps.roughness[0]; });
        list.push_back({{"name", p.name}, {"size", p.maps.size}, {"kind", uniform ? "uniform" : "spatially_varying"}});
    }
    return json{{"presets", list}, {"neural", has_model()}}.dump();
}

std::string RenderService::response_json(const RenderResult& r)
{
    json j = {{"image", base64_encode(r.png)},
              {"width", r.image.width},
              {"height", r.image.height},
              {"engine", r.engine == Engine::Neural ? "neural" : "reference"},
              {"preprocess_ms", r.preprocess_ms}};
    if (r.engine == Engine::Neural)
        j["inference_ms"] = r.inference_ms;
    else
        j["trace_ms"] = r.trace_ms;
    return j.dump();
}

} // namespace matforge::service
