#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace matforge {

// 8-bit image with interleaved channels (1 = gray, 3 = RGB).
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;
};

// Deterministic PNG encoding (fixed zlib level, no timestamps), so equal
// pixels always produce equal bytes.
std::vector<std::uint8_t> encode_png(const Image8& image);
Image8 decode_png(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const Image8& image);
// Gray+alpha and RGBA inputs drop alpha; 16-bit inputs are reduced to 8 bits.
Image8 read_png(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

// Maps [0,1] to 0..255 with round-to-nearest; out-of-range values clamp.
std::uint8_t quantize_unit(float v) noexcept;

} // namespace matforge
