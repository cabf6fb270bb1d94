#pragma once

// Flat-directory exchange format: <name>_diffuse.png, <name>_specular.png,
// <name>_roughness.png (gray) and <name>_normal.png, all 8-bit, same square
// size.

#include "matforge/render/material.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace matforge::dataset {

using render::MaterialMaps;

inline constexpr const char* kMapChannels[4] = {"diffuse", "specular", "roughness", "normal"};

struct NamedMaterial {
    std::string name;
    MaterialMaps maps;
};

struct ImportError {
    std::string name;
    std::string message;
};

struct ImportResult {
    std::vector<NamedMaterial> materials;  // sorted by name
    std::vector<ImportError> errors;       // one per rejected material
};

// Writes the four PNGs for `name` into `dir` (created if needed).
void export_svbrdf(const std::filesystem::path& dir, const std::string& name, const MaterialMaps& maps);

// Loads every complete quadruple in `dir`. Materials with a missing map,
// mismatched or non-square sizes, or invalid values are reported in
// `errors` and skipped; the rest still load. Throws IoError only if `dir`
// is not a readable directory.
ImportResult import_svbrdf(const std::filesystem::path& dir);

// Loads one material by name; throws on any problem.
MaterialMaps load_material(const std::filesystem::path& dir, const std::string& name);

} // namespace matforge::dataset
