#include "matforge/shading/sky.hpp"

#include "matforge/core/error.hpp"

#include <cmath>
#include <string>

namespace matforge::shading {

namespace {

// Extraterrestrial solar luminance in kcd/m^2, split equally over RGB.
constexpr double kSunLuminance = 2.0e6;
constexpr double kGroundFactor = 0.3;
constexpr double kDegToRad = kPi / 180.0;

// Perez coefficients as linear functions of turbidity: {slope, offset}.
constexpr double kPerez[3][5][2] = {
    {{0.1787, -1.4630}, {-0.3554, 0.4275}, {-0.0227, 5.3251}, {0.1206, -2.5771}, {-0.0670, 0.3703}},
    {{-0.0193, -0.2592}, {-0.0665, 0.0008}, {-0.0004, 0.2125}, {-0.0641, -0.8989}, {-0.0033, 0.0452}},
    {{-0.0167, -0.2608}, {-0.0950, 0.0092}, {-0.0079, 0.2102}, {-0.0441, -1.6537}, {-0.0109, 0.0529}},
};

// Zenith chromaticity: [T^2, T, 1] * M * [ts^3, ts^2, ts, 1].
constexpr double kZenithX[3][4] = {
    {0.00166, -0.00375, 0.00209, 0.0},
    {-0.02903, 0.06377, -0.03202, 0.00394},
    {0.11693, -0.21196, 0.06052, 0.25886},
};
constexpr double kZenithY[3][4] = {
    {0.00275, -0.00610, 0.00317, 0.0},
    {-0.04214, 0.08970, -0.04153, 0.00516},
    {0.15346, -0.26756, 0.06670, 0.26688},
};

double zenith_chromaticity(const double (&m)[3][4], double turbidity, double theta_s)
{
    const double t[3] = {turbidity * turbidity, turbidity, 1.0};
    const double s[4] = {theta_s * theta_s * theta_s, theta_s * theta_s, theta_s, 1.0};
    double acc = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j)
            acc += t[i] * m[i][j] * s[j];
    return acc;
}

double perez(const double (&c)[5], double cos_theta, double gamma)
{
    const double cos_gamma = std::cos(gamma);
    return (1.0 + c[0] * std::exp(c[1] / std::max(cos_theta, 1e-4)))
           * (1.0 + c[2] * std::exp(c[3] * gamma) + c[4] * cos_gamma * cos_gamma);
}

Rgb yxy_to_linear_srgb(double Y, double x, double y)
{
    if (!(Y > 0.0) || !(y > 0.0))
        return {};
    const double X = x / y * Y;
    const double Z = (1.0 - x - y) / y * Y;
    const double r = 3.2404542 * X - 1.5371385 * Y - 0.4985314 * Z;
    const double g = -0.9692660 * X + 1.8760108 * Y + 0.0415560 * Z;
    const double b = 0.0556434 * X - 0.2040259 * Y + 1.0572252 * Z;
    return {std::max(0.0, r), std::max(0.0, g), std::max(0.0, b)};
}

// Rayleigh plus Angstrom aerosol transmittance along the Kasten air mass.
double sun_transmittance(double lambda_um, double turbidity, double theta_s)
{
    const double theta_deg = theta_s / kDegToRad;
    const double air_mass = 1.0 / (std::cos(theta_s) + 0.15 * std::pow(93.885 - theta_deg, -1.253));
    const double beta = 0.04608 * turbidity - 0.04586;
    const double tau_r = 0.008735 * std::pow(lambda_um, -4.08);
    const double tau_a = beta * std::pow(lambda_um, -1.3);
    return std::exp(-(tau_r + tau_a) * air_mass);
}

double angle_between(const Vec3& a, const Vec3& b)
{
    return std::acos(std::clamp(dot(a, b), -1.0, 1.0));
}

} // namespace

void validate(const SkyParams& sky)
{
    if (!(std::abs(length(sky.sun_dir) - 1.0) <= 1e-5))
        throw ValueError("sun_dir must be a unit vector");
    if (!(sky.sun_dir.y > 0.0))
        throw ValueError("sun_dir must point above the horizon");
    if (!(sky.turbidity >= kMinTurbidity && sky.turbidity <= kMaxTurbidity))
        throw ValueError("turbidity must lie in [1.7,10], got " + std::to_string(sky.turbidity));
}

Vec3 sun_direction(double azimuth_deg, double elevation_deg)
{
    const double az = azimuth_deg * kDegToRad;
    const double el = elevation_deg * kDegToRad;
    return {std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az)};
}

double sun_solid_angle() noexcept
{
    return 2.0 * kPi * (1.0 - std::cos(kSunAngularRadiusDeg * kDegToRad));
}

PerezSky::PerezSky(const SkyParams& params) : params_(params)
{
    validate(params);
    const double T = params.turbidity;
    for (int q = 0; q < 3; ++q)
        for (int k = 0; k < 5; ++k)
            coeffs_[q][k] = kPerez[q][k][0] * T + kPerez[q][k][1];

    const double theta_s = std::acos(std::clamp(params.sun_dir.y, -1.0, 1.0));
    const double chi = (4.0 / 9.0 - T / 120.0) * (kPi - 2.0 * theta_s);
    const double zenith_Y = (4.0453 * T - 4.9710) * std::tan(chi) - 0.2155 * T + 2.4192;
    zenith_[0] = std::max(0.0, zenith_Y) * kSkyRadianceScale;
    zenith_[1] = zenith_chromaticity(kZenithX, T, theta_s);
    zenith_[2] = zenith_chromaticity(kZenithY, T, theta_s);
    for (int q = 0; q < 3; ++q)
        norm_[q] = perez(coeffs_[q], 1.0, theta_s);

    const double l0 = kSunLuminance * kSkyRadianceScale;
    sun_.direction = params.sun_dir;
    sun_.radiance = {l0 * sun_transmittance(0.65, T, theta_s), l0 * sun_transmittance(0.55, T, theta_s),
                     l0 * sun_transmittance(0.45, T, theta_s)};
    sun_.solid_angle = sun_solid_angle();
}

Rgb PerezSky::radiance(const Vec3& dir) const
{
    if (!(dir.y > 0.0))
        return Rgb::gray(kGroundFactor * zenith_[0]);
    const double gamma = angle_between(dir, params_.sun_dir);
    double v[3];
    for (int q = 0; q < 3; ++q)
        v[q] = zenith_[q] * perez(coeffs_[q], dir.y, gamma) / norm_[q];
    return yxy_to_linear_srgb(v[0], v[1], v[2]);
}

Rgb sky_radiance(const Vec3& dir, const SkyParams& sky) { return PerezSky(sky).radiance(dir); }

SunLight sun_contribution(const SkyParams& sky) { return PerezSky(sky).sun(); }

DirectionSample sample_sky(const SkyParams&, double u1, double u2)
{
    const Vec3 local = cosine_hemisphere(u1, u2);
    // Local +z maps to world +y.
    const Vec3 dir{local.x, local.z, local.y};
    return {dir, sky_sample_pdf(dir)};
}

double sky_sample_pdf(const Vec3& dir) noexcept { return std::max(0.0, dir.y) / kPi; }

} // namespace matforge::shading
