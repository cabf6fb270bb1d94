#pragma once

// Cook-Torrance microfacet reflectance: Lambertian diffuse plus a GGX
// specular lobe with height-correlated Smith masking and Schlick Fresnel.
//
//   f_r(wi, wo) = diffuse / pi + D(h) G2(wi, wo) F(wi.h) / (4 (n.wi)(n.wo))
//
// Roughness r is perceptual; the GGX width is alpha = r^2 and r is floored
// at kMinRoughness. Fresnel is Schlick with a grazing value
// F90 = min(1, 50 F0) per channel, so F0 = 0 switches the specular lobe off.

#include "matforge/shading/vec.hpp"

namespace matforge::shading {

inline constexpr double kMinRoughness = 0.05;

struct BrdfParams {
    Rgb diffuse;      // albedo in [0,1]^3
    Rgb specular;     // Fresnel F0 in [0,1]^3
    double roughness = 0.5;
    Vec3 normal{0.0, 0.0, 1.0};  // unit shading normal, world space
};

struct BrdfSample {
    Vec3 wi;
    double pdf = 0.0;  // solid-angle density, sr^-1
};

// Throws ValueError when a parameter is out of range.
void validate(const BrdfParams& p);

double ggx_alpha(double roughness) noexcept;
// GGX normal distribution for cos(theta_h) = n.h.
double ggx_distribution(double n_dot_h, double alpha) noexcept;
// Smith-GGX Lambda(w) for cos(theta) of w.
double smith_lambda(double cos_theta, double alpha) noexcept;
// Height-correlated masking-shadowing G2.
double smith_g2(double cos_i, double cos_o, double alpha) noexcept;
Rgb schlick_fresnel(const Rgb& f0, double cos_theta) noexcept;

// f_r in sr^-1. Zero unless both directions lie above the shading normal.
// Throws ValueError if wi or wo is not unit length.
Rgb eval_brdf(const BrdfParams& p, const Vec3& wi, const Vec3& wo);

// Probability of picking the specular lobe in the sampling mixture (from
// the lobe albedos seen from wo); 0 and 1 are possible.
double specular_lobe_probability(const BrdfParams& p, const Vec3& wo) noexcept;

// Density of sample_brdf for the pair (wo, wi).
double pdf_brdf(const BrdfParams& p, const Vec3& wo, const Vec3& wi) noexcept;

// Draws wi from the mixture of a cosine-weighted hemisphere (diffuse lobe)
// and GGX half-vector sampling (specular lobe). The returned pdf is
// pdf_brdf(p, wo, wi) bit for bit and is always > 0. wi may fall below the
// surface for the specular lobe, where eval_brdf is zero.
BrdfSample sample_brdf(const BrdfParams& p, const Vec3& wo, double u1, double u2);

} // namespace matforge::shading
