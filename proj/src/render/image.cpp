#include "matforge/render/image.hpp"

#include "matforge/core/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

namespace matforge::render {

namespace {

constexpr char kHdrMagic[4] = {'M', 'F', 'H', 'D'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(std::uint8_t(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p)
{
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

} // namespace

Image Image::zeros(int width, int height, int channels)
{
    Image im;
    im.width = width;
    im.height = height;
    im.channels = channels;
    im.pixels.assign(std::size_t(width) * height * channels, 0.0f);
    return im;
}

Image tonemap(const Image& hdr, double exposure)
{
    if (!(exposure > 0.0))
        throw ValueError("exposure must be > 0");
    Image out = hdr;
    for (float& v : out.pixels) {
        const double x = std::clamp(double(v) * exposure, 0.0, 1.0);
        v = float(std::pow(x, 1.0 / 2.2));
    }
    return out;
}

Image8 to_image8(const Image& ldr)
{
    Image8 out{ldr.width, ldr.height, ldr.channels, {}};
    out.pixels.resize(ldr.pixels.size());
    std::transform(ldr.pixels.begin(), ldr.pixels.end(), out.pixels.begin(), quantize_unit);
    return out;
}

Image from_image8(const Image8& image)
{
    Image out = Image::zeros(image.width, image.height, image.channels);
    for (std::size_t i = 0; i < image.pixels.size(); ++i)
        out.pixels[i] = float(image.pixels[i]) / 255.0f;
    return out;
}

void write_hdr(const std::filesystem::path& path, const Image& image)
{
    std::vector<std::uint8_t> bytes(kHdrMagic, kHdrMagic + 4);
    put_u32(bytes, std::uint32_t(image.width));
    put_u32(bytes, std::uint32_t(image.height));
    put_u32(bytes, std::uint32_t(image.channels));
    for (float v : image.pixels)
        put_u32(bytes, std::bit_cast<std::uint32_t>(v));
    write_file(path, bytes);
}

Image read_hdr(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kHdrMagic, 4) != 0)
        throw IoError("not an MFHD image: " + path.string());
    Image im;
    im.width = int(get_u32(bytes.data() + 4));
    im.height = int(get_u32(bytes.data() + 8));
    im.channels = int(get_u32(bytes.data() + 12));
    const std::size_t n = std::size_t(im.width) * im.height * im.channels;
    if (bytes.size() != 16 + 4 * n)
        throw IoError("MFHD image has " + std::to_string(bytes.size()) + " bytes, expected "
                      + std::to_string(16 + 4 * n) + ": " + path.string());
    im.pixels.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        im.pixels[i] = std::bit_cast<float>(get_u32(bytes.data() + 16 + 4 * i));
    return im;
}

std::vector<float> to_planar(const Image& image)
{
    const std::size_t hw = std::size_t(image.width) * image.height;
    std::vector<float> out(image.pixels.size());
    for (std::size_t i = 0; i < hw; ++i)
        for (int c = 0; c < image.channels; ++c)
            out[c * hw + i] = image.pixels[i * image.channels + c];
    return out;
}

Image from_planar(const std::vector<float>& planar, int width, int height, int channels)
{
    const std::size_t hw = std::size_t(width) * height;
    if (planar.size() != hw * channels)
        throw ShapeError("planar buffer does not match " + std::to_string(channels) + "x" + std::to_string(height)
                         + "x" + std::to_string(width));
    Image out = Image::zeros(width, height, channels);
    for (std::size_t i = 0; i < hw; ++i)
        for (int c = 0; c < channels; ++c)
            out.pixels[i * channels + c] = planar[c * hw + i];
    return out;
}

} // namespace matforge::render
