#pragma once

// Daylight model parameterized by sun direction and turbidity.
//
// Sky dome: Perez luminance/chromaticity distribution with the turbidity-
// linear coefficients and zenith polynomials of Preetham, Shirley & Smits
// (1999), converted Yxy -> XYZ -> linear sRGB. Sun: a disk of angular radius
// 0.265 deg whose radiance is a fixed extraterrestrial value attenuated by
// Rayleigh and Angstrom-aerosol transmittance along the Kasten air mass.
// Below the horizon the dome returns a constant gray ground term.

#include "matforge/shading/vec.hpp"

#include <memory>

namespace matforge::shading {

inline constexpr double kMinTurbidity = 1.7;
inline constexpr double kMaxTurbidity = 10.0;
inline constexpr double kSunAngularRadiusDeg = 0.265;
// Scale from Preetham luminance (kcd/m^2) to scene radiance units.
inline constexpr double kSkyRadianceScale = 1.0 / 80.0;

inline constexpr Vec3 kUp{0.0, 1.0, 0.0};

struct SkyParams {
    Vec3 sun_dir{0.0, 1.0, 0.0};  // unit, y > 0
    double turbidity = 3.0;
};

// Throws ValueError if the sun is not above the horizon, not unit length,
// or the turbidity is outside [1.7, 10].
void validate(const SkyParams& sky);

// Unit sun direction from azimuth (deg, 0 = +z toward the camera, 90 = +x)
// and elevation (deg above the horizon).
Vec3 sun_direction(double azimuth_deg, double elevation_deg);

struct SunLight {
    Vec3 direction;
    Rgb radiance;        // per channel, constant over the disk
    double solid_angle;  // sr
};

struct DirectionSample {
    Vec3 dir;
    double pdf = 0.0;
};

// Environment seen by the path tracer: a dome radiance function (without
// the sun disk) plus an optional sun handled as a directional light.
class SkyModel {
public:
    virtual ~SkyModel() = default;
    virtual Rgb radiance(const Vec3& dir) const = 0;
    virtual bool has_sun() const = 0;
    virtual SunLight sun() const = 0;
};

// Perez dome with precomputed per-turbidity coefficients.
class PerezSky final : public SkyModel {
public:
    explicit PerezSky(const SkyParams& params);

    Rgb radiance(const Vec3& dir) const override;
    bool has_sun() const override { return true; }
    SunLight sun() const override { return sun_; }

    const SkyParams& params() const { return params_; }
    // Zenith luminance in scene units; the ground term is 0.3 times this.
    double zenith_luminance() const { return zenith_[0]; }

private:
    SkyParams params_;
    double coeffs_[3][5];  // Perez A..E for Y, x, y
    double zenith_[3];     // Y (scaled), x, y at the zenith
    double norm_[3];       // F(0, theta_sun) per quantity
    SunLight sun_;
};

// Uniform radiance in every direction, no sun (white-furnace test hook).
class UniformSky final : public SkyModel {
public:
    explicit UniformSky(Rgb radiance) : radiance_(radiance) {}
    Rgb radiance(const Vec3&) const override { return radiance_; }
    bool has_sun() const override { return false; }
    SunLight sun() const override { return {kUp, {}, 0.0}; }

private:
    Rgb radiance_;
};

// Sun of a PerezSky with a black dome (direct-lighting test hook).
class SunOnlySky final : public SkyModel {
public:
    explicit SunOnlySky(const SkyParams& params) : sun_(PerezSky(params).sun()) {}
    Rgb radiance(const Vec3&) const override { return {}; }
    bool has_sun() const override { return true; }
    SunLight sun() const override { return sun_; }

private:
    SunLight sun_;
};

// Dome radiance of the Perez sky, sun disk excluded.
Rgb sky_radiance(const Vec3& dir, const SkyParams& sky);

// Sun direction, radiance and disk solid angle 2 pi (1 - cos 0.265 deg).
SunLight sun_contribution(const SkyParams& sky);

// Cosine-weighted sampling of the upper hemisphere around +y.
DirectionSample sample_sky(const SkyParams& sky, double u1, double u2);
double sky_sample_pdf(const Vec3& dir) noexcept;

double sun_solid_angle() noexcept;

} // namespace matforge::shading
