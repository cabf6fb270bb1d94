#include "matforge/eval/metrics.hpp"

#include "matforge/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace matforge::eval {

namespace {

void require_same_shape(const render::Image& a, const render::Image& b, const char* what)
{
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw ShapeError(std::string(what) + ": images " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                         "x" + std::to_string(a.channels) + " and " + std::to_string(b.width) + "x" +
                         std::to_string(b.height) + "x" + std::to_string(b.channels) + " differ");
}

} // namespace

double psnr(const render::Image& a, const render::Image& b)
{
    require_same_shape(a, b, "psnr");
    if (a.pixels.empty())
        throw ValueError("psnr: empty images");
    double se = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = double(a.pixels[i]) - double(b.pixels[i]);
        se += d * d;
    }
    const double mse = se / double(a.pixels.size());
    if (mse == 0.0)
        return kPsnrCap;
    return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

std::vector<double> luma(const render::Image& img)
{
    std::vector<double> y(std::size_t(img.width) * img.height);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const float* p = &img.pixels[i * std::size_t(img.channels)];
        y[i] = img.channels >= 3 ? 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2] : double(p[0]);
    }
    return y;
}

double ssim(const render::Image& a, const render::Image& b)
{
    require_same_shape(a, b, "ssim");
    if (a.width < kSsimWindow || a.height < kSsimWindow)
        throw ValueError("ssim: image " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                         " is smaller than the " + std::to_string(kSsimWindow) + "x" + std::to_string(kSsimWindow) +
                         " window");
    const auto x = luma(a), y = luma(b);
    const double c1 = kSsimK1 * kSsimK1, c2 = kSsimK2 * kSsimK2;
    const double n = kSsimWindow * kSsimWindow;
    double total = 0.0;
    int windows = 0;
    for (int wy = 0; wy + kSsimWindow <= a.height; ++wy) {
        for (int wx = 0; wx + kSsimWindow <= a.width; ++wx) {
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (int j = 0; j < kSsimWindow; ++j) {
                for (int i = 0; i < kSsimWindow; ++i) {
                    const std::size_t k = std::size_t(wy + j) * a.width + std::size_t(wx + i);
                    sx += x[k];
                    sy += y[k];
                    sxx += x[k] * x[k];
                    syy += y[k] * y[k];
                    sxy += x[k] * y[k];
                }
            }
            const double mx = sx / n, my = sy / n;
            const double vx = sxx / n - mx * mx, vy = syy / n - my * my;
            const double cov = sxy / n - mx * my;
            total += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++windows;
        }
    }
    return total / windows;
}

} // namespace matforge::eval
