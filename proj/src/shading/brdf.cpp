#include "matforge/shading/brdf.hpp"

#include "matforge/core/error.hpp"

#include <cmath>
#include <string>

namespace matforge::shading {

namespace {

constexpr double kUnitTolerance = 1e-5;

bool in_unit_range(const Rgb& c)
{
    auto ok = [](double v) { return v >= 0.0 && v <= 1.0; };
    return ok(c.r) && ok(c.g) && ok(c.b);
}

void require_unit(const Vec3& v, const char* name)
{
    const double len = length(v);
    if (!(std::abs(len - 1.0) <= kUnitTolerance))
        throw ValueError(std::string(name) + " must be a unit vector (length " + std::to_string(len) + ")");
}

double effective_roughness(double r) { return std::max(r, kMinRoughness); }

double schlick_weight(double cos_theta)
{
    const double m = std::clamp(1.0 - cos_theta, 0.0, 1.0);
    const double m2 = m * m;
    return m2 * m2 * m;
}

// Half vector of (wo, wi) oriented into the normal's hemisphere.
Vec3 oriented_half(const Vec3& wo, const Vec3& wi, const Vec3& n)
{
    Vec3 h = wo + wi;
    const double len = length(h);
    if (len == 0.0)
        return n;
    h = h / len;
    return dot(h, n) < 0.0 ? -h : h;
}

} // namespace

void validate(const BrdfParams& p)
{
    if (!in_unit_range(p.diffuse))
        throw ValueError("diffuse must lie in [0,1]");
    if (!in_unit_range(p.specular))
        throw ValueError("specular must lie in [0,1]");
    if (!(p.roughness >= kMinRoughness && p.roughness <= 1.0))
        throw ValueError("roughness must lie in [0.05,1]");
    if (!(std::abs(length(p.normal) - 1.0) <= 1e-6))
        throw ValueError("normal must be unit length");
}

double ggx_alpha(double roughness) noexcept
{
    const double r = effective_roughness(roughness);
    return r * r;
}

double ggx_distribution(double n_dot_h, double alpha) noexcept
{
    if (n_dot_h <= 0.0)
        return 0.0;
    const double a2 = alpha * alpha;
    const double c2 = n_dot_h * n_dot_h;
    const double d = c2 * (a2 - 1.0) + 1.0;
    return a2 / (kPi * d * d);
}

double smith_lambda(double cos_theta, double alpha) noexcept
{
    if (cos_theta >= 1.0)
        return 0.0;
    const double c2 = cos_theta * cos_theta;
    const double tan2 = (1.0 - c2) / c2;
    return 0.5 * (std::sqrt(1.0 + alpha * alpha * tan2) - 1.0);
}

double smith_g2(double cos_i, double cos_o, double alpha) noexcept
{
    if (cos_i <= 0.0 || cos_o <= 0.0)
        return 0.0;
    return 1.0 / (1.0 + smith_lambda(cos_i, alpha) + smith_lambda(cos_o, alpha));
}

Rgb schlick_fresnel(const Rgb& f0, double cos_theta) noexcept
{
    const double w = schlick_weight(cos_theta);
    auto channel = [w](double f) { return f + (std::min(1.0, 50.0 * f) - f) * w; };
    return {channel(f0.r), channel(f0.g), channel(f0.b)};
}

Rgb eval_brdf(const BrdfParams& p, const Vec3& wi, const Vec3& wo)
{
    require_unit(wi, "wi");
    require_unit(wo, "wo");
    const Vec3& n = p.normal;
    const double cos_i = dot(n, wi);
    const double cos_o = dot(n, wo);
    if (cos_i <= 0.0 || cos_o <= 0.0)
        return {};

    Rgb f = p.diffuse * (1.0 / kPi);
    if (p.specular.is_black())
        return f;

    const Vec3 h = normalize(wi + wo);
    const double alpha = ggx_alpha(p.roughness);
    const double d = ggx_distribution(dot(n, h), alpha);
    const double g = smith_g2(cos_i, cos_o, alpha);
    // wi.h == wo.h for the exact half vector; averaging keeps the result
    // symmetric to the last bit.
    const double cos_d = 0.5 * (dot(wi, h) + dot(wo, h));
    const Rgb fresnel = schlick_fresnel(p.specular, cos_d);
    f += fresnel * (d * g / (4.0 * cos_i * cos_o));
    return f;
}

double specular_lobe_probability(const BrdfParams& p, const Vec3& wo) noexcept
{
    const double w_d = p.diffuse.luminance();
    const double w_s = schlick_fresnel(p.specular, std::max(0.0, dot(p.normal, wo))).luminance();
    const double total = w_d + w_s;
    if (!(total > 0.0))
        return 0.0;
    return w_s / total;
}

double pdf_brdf(const BrdfParams& p, const Vec3& wo, const Vec3& wi) noexcept
{
    const Vec3& n = p.normal;
    const double p_s = specular_lobe_probability(p, wo);
    double pdf = 0.0;
    if (p_s < 1.0)
        pdf += (1.0 - p_s) * std::max(0.0, dot(n, wi)) / kPi;
    if (p_s > 0.0) {
        const Vec3 h = oriented_half(wo, wi, n);
        const double wo_h = std::abs(dot(wo, h));
        if (wo_h > 0.0) {
            const double n_h = dot(n, h);
            pdf += p_s * ggx_distribution(n_h, ggx_alpha(p.roughness)) * n_h / (4.0 * wo_h);
        }
    }
    return pdf;
}

BrdfSample sample_brdf(const BrdfParams& p, const Vec3& wo, double u1, double u2)
{
    const Frame frame = Frame::around(p.normal);
    const double p_s = specular_lobe_probability(p, wo);

    Vec3 wi;
    if (u1 < p_s) {
        const double u = u1 / p_s;
        const double alpha = ggx_alpha(p.roughness);
        const double t2 = alpha * alpha * u / (1.0 - u);
        const double cos_h = 1.0 / std::sqrt(1.0 + t2);
        const double sin_h = std::sqrt(std::max(0.0, 1.0 - cos_h * cos_h));
        const double phi = 2.0 * kPi * u2;
        const Vec3 h = frame.to_world({sin_h * std::cos(phi), sin_h * std::sin(phi), cos_h});
        wi = normalize(reflect(wo, h));
    } else {
        const double u = p_s > 0.0 ? (u1 - p_s) / (1.0 - p_s) : u1;
        wi = normalize(frame.to_world(cosine_hemisphere(u, u2)));
    }

    double pdf = pdf_brdf(p, wo, wi);
    if (!(pdf > 0.0) || !std::isfinite(pdf)) {
        // Measure-zero corner (half vector exactly on the horizon).
        wi = p.normal;
        pdf = pdf_brdf(p, wo, wi);
    }
    return {wi, pdf};
}

} // namespace matforge::shading
