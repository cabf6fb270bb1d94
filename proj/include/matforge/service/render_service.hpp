#pragma once

// Rendering service behind the HTTP API: request validation, presets and
// the two engines. Shared state (model, presets) is immutable after
// construction, so one instance serves concurrent requests.

#include "matforge/core/error.hpp"
#include "matforge/dataset/svbrdf_io.hpp"
#include "matforge/neural/network.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace matforge::service {

inline constexpr double kMinElevationDeg = 0.0;  // exclusive
inline constexpr double kMaxElevationDeg = 90.0;
inline constexpr int kMinResolution = 8;

// A request that cannot be served; `status` is the HTTP code and `field`
// names the offending request field when there is one.
class ServiceError : public Error {
public:
    ServiceError(int status, std::string field, const std::string& message)
        : Error(field.empty() ? message : field + ": " + message), status_(status), field_(std::move(field))
    {
    }
    int status() const { return status_; }
    const std::string& field() const { return field_; }

private:
    int status_;
    std::string field_;
};

enum class Engine { Neural, Reference };

struct UniformMaterial {
    shading::Rgb diffuse{0.5, 0.5, 0.5};
    shading::Rgb specular{0.04, 0.04, 0.04};
    double roughness = 0.5;
};

struct RenderRequest {
    std::optional<std::string> preset;  // otherwise `uniform`
    UniformMaterial uniform;
    double azimuth_deg = 45.0;
    double elevation_deg = 45.0;
    double turbidity = 3.0;
    Engine engine = Engine::Reference;
    int spp = 16;
    int resolution = 64;
    std::uint64_t seed = 0;

    dataset::LightCondition light() const;
};

struct RenderResult {
    Image8 image;
    std::vector<std::uint8_t> png;
    Engine engine = Engine::Reference;
    double preprocess_ms = 0.0;
    double inference_ms = 0.0;  // neural
    double trace_ms = 0.0;      // reference
};

struct ServiceConfig {
    std::filesystem::path checkpoint;  // empty: neural engine disabled
    std::filesystem::path presets_dir;  // extra presets in the exchange format
    int max_spp = 256;                  // reference requests above this get 429
    int max_resolution = 256;
    unsigned threads = 0;
};

// Built-in presets: three uniform materials and three procedural SVBRDFs.
std::vector<dataset::NamedMaterial> builtin_presets(int size = 64);

class RenderService {
public:
    // Throws IoError if a configured checkpoint or presets dir is unreadable.
    explicit RenderService(ServiceConfig config);
    // Takes an already loaded model, e.g. in tests.
    RenderService(ServiceConfig config, std::optional<neural::Model> model);

    bool has_model() const { return model_.has_value(); }
    const ServiceConfig& config() const { return config_; }
    const std::vector<dataset::NamedMaterial>& presets() const { return presets_; }

    // Throws ServiceError(400, field, ...) for malformed or out-of-range input.
    RenderRequest parse_request(const std::string& json_body) const;
    // Throws ServiceError 400 (unknown preset, resolution), 409 (neural
    // without a model) or 429 (spp over budget).
    RenderResult render(const RenderRequest& request) const;

    std::string presets_json() const;
    static std::string response_json(const RenderResult& result);

private:
    const render::MaterialMaps& preset(const std::string& name) const;

    ServiceConfig config_;
    std::optional<neural::Model> model_;
    std::vector<dataset::NamedMaterial> presets_;
};

} // namespace matforge::service
