#pragma once

// Cook-Torrance parameter maps in texture space and their lookup.

#include "matforge/shading/brdf.hpp"
#include "matforge/shading/vec.hpp"

#include <vector>

namespace matforge::render {

using shading::Rgb;
using shading::Vec3;

// Four square maps of size x size texels, row-major, values in [0,1].
// The normal map is tangent space, encoded as 0.5 * n + 0.5 (flat =
// (0.5, 0.5, 1)); roughness decodes to max(value, 0.05).
struct MaterialMaps {
    int size = 0;
    std::vector<float> diffuse;    // size*size*3
    std::vector<float> specular;   // size*size*3
    std::vector<float> roughness;  // size*size
    std::vector<float> normal;     // size*size*3

    static MaterialMaps uniform(int size, Rgb diffuse, Rgb specular, double roughness);
    bool operator==(const MaterialMaps&) const = default;
};

// Throws ShapeError for missing or mis-sized channels and ValueError for
// values outside [0,1].
void validate(const MaterialMaps& maps);

struct MaterialSample {
    Rgb diffuse;
    Rgb specular;
    double roughness = 0.5;
    Vec3 tangent_normal{0.0, 0.0, 1.0};  // decoded and unit length
};

// Bilinear lookup with wrap-around at texture coordinate (u, v); v = 0 is
// the first row. Constant maps return their value exactly.
MaterialSample lookup(const MaterialMaps& maps, double u, double v);

Vec3 decode_normal(double r, double g, double b);

} // namespace matforge::render
