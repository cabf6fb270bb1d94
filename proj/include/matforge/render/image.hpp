#pragma once

#include "matforge/core/png_io.hpp"

#include <filesystem>
#include <vector>

namespace matforge::render {

// Float RGB image, interleaved, row-major. Used both for linear HDR
// radiance and for tonemapped values in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<float> pixels;

    static Image zeros(int width, int height, int channels = 3);
    float& at(int x, int y, int c) { return pixels[(std::size_t(y) * width + x) * channels + c]; }
    float at(int x, int y, int c) const { return pixels[(std::size_t(y) * width + x) * channels + c]; }
    bool operator==(const Image&) const = default;
};

// Default exposure: a white Lambertian sphere under a turbidity-3 sky with
// the sun at the zenith peaks near 0.9 after tonemapping.
inline constexpr double kDefaultExposure = 1.4;

// clamp(hdr * exposure, 0, 1) ^ (1/2.2) per channel. exposure must be > 0.
Image tonemap(const Image& hdr, double exposure = kDefaultExposure);

Image8 to_image8(const Image& ldr);
Image from_image8(const Image8& image);

// "MFHD", width u32, height u32, channels u32, then little-endian f32 data.
void write_hdr(const std::filesystem::path& path, const Image& image);
Image read_hdr(const std::filesystem::path& path);

// Interleaved HWC <-> planar CHW.
std::vector<float> to_planar(const Image& image);
Image from_planar(const std::vector<float>& planar, int width, int height, int channels);

} // namespace matforge::render
