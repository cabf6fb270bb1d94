#pragma once

// Direct-formula PSNR and SSIM written independently of the library:
// images as plain vectors, two-pass window statistics.

#include <cmath>
#include <vector>

namespace matforge::testing {

inline double psnr_oracle(const std::vector<double>& a, const std::vector<double>& b)
{
    long double se = 0.0L;
    for (std::size_t i = a.size(); i-- > 0;)
        se += (long double)(a[i] - b[i]) * (a[i] - b[i]);
    const double mse = double(se / a.size());
    return mse == 0.0 ? 99.0 : 10.0 * std::log10(1.0 / mse);
}

// Gray images of w x h; 8x8 windows at every offset.
inline double ssim_oracle(const std::vector<double>& x, const std::vector<double>& y, int w, int h)
{
    const int k = 8;
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double acc = 0.0;
    int count = 0;
    for (int oy = 0; oy <= h - k; ++oy) {
        for (int ox = 0; ox <= w - k; ++ox) {
            double mx = 0, my = 0;
            for (int j = 0; j < k; ++j)
                for (int i = 0; i < k; ++i) {
                    mx += x[(oy + j) * w + ox + i];
                    my += y[(oy + j) * w + ox + i];
                }
            mx /= k * k;
            my /= k * k;
            double vx = 0, vy = 0, cxy = 0;
            for (int j = 0; j < k; ++j)
                for (int i = 0; i < k; ++i) {
                    const double dx = x[(oy + j) * w + ox + i] - mx;
                    const double dy = y[(oy + j) * w + ox + i] - my;
                    vx += dx * dx;
                    vy += dy * dy;
                    cxy += dx * dy;
                }
            vx /= k * k;
            vy /= k * k;
            cxy /= k * k;
            acc += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return acc / count;
}

} // namespace matforge::testing
