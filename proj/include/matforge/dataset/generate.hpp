#pragma once

// Procedural Cook-Torrance parameter maps. All values are stored already
// quantized to 8 bits (k/255) so PNG export and import are lossless and a
// ground-truth render from reloaded maps reproduces the stored image.

#include "matforge/render/material.hpp"

#include <cstdint>

namespace matforge::dataset {

using render::MaterialMaps;

// k/255 as stored by every generator and importer.
float dequantize(std::uint8_t k) noexcept;
float quantize_value(double v) noexcept;

// Spatially constant maps: diffuse and specular uniform per channel in
// [0,1], roughness uniform in [0.05,1], flat normal.
MaterialMaps gen_uniform_map(std::uint64_t seed, int size);

// Spatially varying maps (size >= 16): a tileable Voronoi partition assigns
// each cell a base material, tileable value-noise octaves modulate colour
// and roughness, and the normal map is the renormalized gradient field of a
// height map made of noise plus grooves along cell borders.
MaterialMaps gen_svbrdf_map(std::uint64_t seed, int size);

} // namespace matforge::dataset
