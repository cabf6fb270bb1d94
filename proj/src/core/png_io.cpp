#include "matforge/core/png_io.hpp"

#include "matforge/core/error.hpp"

#include <png.h>

#include <array>
#include <csetjmp>
#include <cmath>
#include <cstring>
#include <fstream>

namespace matforge {

namespace {

void write_callback(png_structp png, png_bytep data, png_size_t length)
{
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void flush_callback(png_structp) {}

struct ReadCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void read_callback(png_structp png, png_bytep data, png_size_t length)
{
    auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cursor->offset + length > cursor->bytes.size()) {
        png_error(png, "unexpected end of PNG data");
    }
    std::memcpy(data, cursor->bytes.data() + cursor->offset, length);
    cursor->offset += length;
}

// libpng is C; errors unwind with longjmp back to the setjmp in the caller
// and are converted to exceptions there.
struct ErrorSlot {
    char message[256] = {};
};

void error_callback(png_structp png, png_const_charp message)
{
    auto* slot = static_cast<ErrorSlot*>(png_get_error_ptr(png));
    std::strncpy(slot->message, message, sizeof(slot->message) - 1);
    png_longjmp(png, 1);
}

void warning_callback(png_structp, png_const_charp) {}

} // namespace

std::uint8_t quantize_unit(float v) noexcept
{
    if (!(v > 0.0f)) {
        return 0;
    }
    if (v >= 1.0f) {
        return 255;
    }
    return static_cast<std::uint8_t>(std::lround(v * 255.0f));
}

std::vector<std::uint8_t> encode_png(const Image8& image)
{
    if (image.width <= 0 || image.height <= 0 || (image.channels != 1 && image.channels != 3)) {
        throw ShapeError("encode_png: unsupported image layout");
    }
    if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * image.channels) {
        throw ShapeError("encode_png: pixel buffer size does not match extents");
    }
    std::vector<std::uint8_t> out;
    ErrorSlot slot;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &slot, error_callback, warning_callback);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError(std::string("png: ") + slot.message);
    }
    {
        png_set_write_fn(png, &out, write_callback, flush_callback);
        png_set_compression_level(png, 6);
        png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                     image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_set_sRGB(png, info, PNG_sRGB_INTENT_PERCEPTUAL);
        png_write_info(png, info);
        const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels;
        for (int y = 0; y < image.height; ++y) {
            png_write_row(png, const_cast<png_bytep>(image.pixels.data() + y * stride));
        }
        png_write_end(png, nullptr);
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

Image8 decode_png(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw IoError("png: not a PNG stream");
    }
    ReadCursor cursor{bytes, 0};
    Image8 image;
    ErrorSlot slot;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &slot, error_callback, warning_callback);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(std::string("png: ") + slot.message);
    }
    {
        png_set_read_fn(png, &cursor, read_callback);
        png_read_info(png, info);
        const auto color = png_get_color_type(png, info);
        const auto depth = png_get_bit_depth(png, info);
        if (depth == 16) {
            png_set_strip_16(png);
        }
        if (color == PNG_COLOR_TYPE_PALETTE) {
            png_set_palette_to_rgb(png);
        }
        if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
            png_set_expand_gray_1_2_4_to_8(png);
        }
        if (color & PNG_COLOR_MASK_ALPHA) {
            png_set_strip_alpha(png);
        }
        png_read_update_info(png, info);
        image.width = static_cast<int>(png_get_image_width(png, info));
        image.height = static_cast<int>(png_get_image_height(png, info));
        image.channels = png_get_channels(png, info);
        if (image.channels != 1 && image.channels != 3) {
            png_error(png, "unsupported channel count");
        }
        const std::size_t stride = png_get_rowbytes(png, info);
        image.pixels.resize(stride * image.height);
        for (int y = 0; y < image.height; ++y) {
            png_read_row(png, image.pixels.data() + y * stride, nullptr);
        }
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

void write_png(const std::filesystem::path& path, const Image8& image)
{
    write_file(path, encode_png(image));
}

Image8 read_png(const std::filesystem::path& path)
{
    try {
        return decode_png(read_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open for reading: " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

namespace {
constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const std::uint8_t> bytes)
{
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += kAlphabet[v & 63];
    }
    if (i + 1 == bytes.size()) {
        const std::uint32_t v = bytes[i] << 16;
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == bytes.size()) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text)
{
    std::array<int, 256> lookup{};
    lookup.fill(-1);
    for (int i = 0; i < 64; ++i) {
        lookup[static_cast<unsigned char>(kAlphabet[i])] = i;
    }
    std::vector<std::uint8_t> out;
    std::uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=') {
            break;
        }
        const int v = lookup[static_cast<unsigned char>(c)];
        if (v < 0) {
            throw ValueError("base64: invalid character");
        }
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
        }
    }
    return out;
}

} // namespace matforge
