#pragma once

#include "matforge/render/image.hpp"

namespace matforge::eval {

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kSsimWindow = 8;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

// 10 log10(1 / MSE) with the MSE averaged over every channel of every
// pixel; capped at 99 dB (identical images). Throws ShapeError on a shape
// mismatch.
double psnr(const render::Image& a, const render::Image& b);

// Mean SSIM over every 8x8 window (stride 1) of the luma images
// (0.299 R + 0.587 G + 0.114 B; one-channel images are used as is), with
// population statistics, k1 = 0.01, k2 = 0.03 and dynamic range 1.
// Throws ValueError if the image is smaller than a window.
double ssim(const render::Image& a, const render::Image& b);

// Luma plane used by ssim.
std::vector<double> luma(const render::Image& image);

} // namespace matforge::eval
