#pragma once

// Dataset factory: maps x sampled light conditions -> path-traced, tonemapped
// ground truth, plus a manifest.
//
// Layout of out_dir:
//   maps/<id>_{diffuse,specular,roughness,normal}.png
//   gt/<id>_<lightidx>.png
//   manifest.json

#include "matforge/render/image.hpp"
#include "matforge/render/material.hpp"
#include "matforge/shading/sky.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace matforge::dataset {

using render::MaterialMaps;

inline constexpr double kMinSunElevationDeg = 5.0;

struct LightCondition {
    shading::Vec3 sun_dir{0.0, 1.0, 0.0};
    double turbidity = 3.0;

    shading::SkyParams sky() const { return {sun_dir, turbidity}; }
};

// Uniform direction on the part of the upper hemisphere above 5 degrees
// elevation, turbidity uniform in [1.7, 10].
LightCondition sample_light(std::uint64_t seed);

struct DatasetConfig {
    int n_maps = 10;
    double sv_fraction = 0.5;
    int lights_per_map = 5;
    int spp = 64;
    int map_resolution = 64;
    int render_resolution = 64;
    int max_bounces = 5;
    double indirect_clamp = 10.0;
    double exposure = render::kDefaultExposure;
    int test_count = -1;  // entries tagged "test", the rest "train"; -1 = 2% (at least 1)
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

void validate(const DatasetConfig& config);
int resolved_test_count(const DatasetConfig& config);

struct MapRecord {
    std::string id;  // "m00012"
    bool spatially_varying = false;
    std::uint64_t seed = 0;
};

struct Entry {
    std::string id;      // "m00012_3"
    std::string map_id;  // "m00012"
    int light_index = 0;
    LightCondition light;
    std::uint64_t render_seed = 0;
    std::string gt_path;  // relative to the dataset root
    bool test = false;
};

struct Manifest {
    DatasetConfig config;
    std::vector<MapRecord> maps;
    std::vector<Entry> entries;

    std::size_t count(bool test) const;
};

// Generates maps, renders ground truth and writes manifest.json. Throws
// IoError if out_dir cannot be written; a failing render aborts with the
// entry id in the message.
Manifest build_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir);

std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const std::string& text);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

// Maps of a manifest entry, read back from the dataset directory.
MaterialMaps load_entry_maps(const std::filesystem::path& root, const std::string& map_id);

// Renders the tonemapped 8-bit ground truth of one entry exactly as
// build_dataset does.
Image8 render_ground_truth(const MaterialMaps& maps, const LightCondition& light, const DatasetConfig& config,
                           std::uint64_t render_seed);

} // namespace matforge::dataset
