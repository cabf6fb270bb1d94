#include "matforge/dataset/svbrdf_io.hpp"

#include "matforge/core/error.hpp"
#include "matforge/core/png_io.hpp"
#include "matforge/dataset/generate.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <system_error>

namespace matforge::dataset {

namespace fs = std::filesystem;

namespace {

Image8 channel_image(const std::vector<float>& values, int size, int channels)
{
    Image8 img{size, size, channels, std::vector<std::uint8_t>(values.size())};
    std::transform(values.begin(), values.end(), img.pixels.begin(), quantize_unit);
    return img;
}

std::vector<float> channel_values(const Image8& img)
{
    std::vector<float> out(img.pixels.size());
    std::transform(img.pixels.begin(), img.pixels.end(), out.begin(), dequantize);
    return out;
}

fs::path map_path(const fs::path& dir, const std::string& name, const char* channel)
{
    return dir / (name + "_" + channel + ".png");
}

// Reads and checks the four maps; throws with a message naming the
// offending channel.
MaterialMaps read_quadruple(const fs::path& dir, const std::string& name)
{
    MaterialMaps maps;
    for (int c = 0; c < 4; ++c) {
        const std::string channel = kMapChannels[c];
        const fs::path path = map_path(dir, name, kMapChannels[c]);
        if (!fs::is_regular_file(path))
            throw IoError("missing " + channel + " map (" + path.filename().string() + ")");
        Image8 img;
        try {
            img = read_png(path);
        } catch (const Error& e) {
            throw IoError(channel + " map: " + e.what());
        }
        const int want_channels = channel == "roughness" ? 1 : 3;
        if (img.channels != want_channels)
            throw ShapeError(channel + " map has " + std::to_string(img.channels) + " channels, expected " +
                             std::to_string(want_channels));
        if (img.width != img.height)
            throw ShapeError(channel + " map is not square (" + std::to_string(img.width) + "x" +
                             std::to_string(img.height) + ")");
        if (c == 0)
            maps.size = img.width;
        else if (img.width != maps.size)
            throw ShapeError(channel + " map is " + std::to_string(img.width) + " texels wide, diffuse is " +
                             std::to_string(maps.size));
        auto values = channel_values(img);
        if (channel == "diffuse")
            maps.diffuse = std::move(values);
        else if (channel == "specular")
            maps.specular = std::move(values);
        else if (channel == "roughness")
            maps.roughness = std::move(values);
        else
            maps.normal = std::move(values);
    }
    // A tangent-space normal must point out of the surface.
    for (std::size_t i = 2; i < maps.normal.size(); i += 3)
        if (maps.normal[i] < 0.5f)
            throw ValueError("normal map texel " + std::to_string(i / 3) + " points below the surface");
    render::validate(maps);
    return maps;
}

std::optional<std::pair<std::string, std::string>> split_name(const fs::path& file)
{
    if (file.extension() != ".png")
        return std::nullopt;
    const std::string stem = file.stem().string();
    for (const char* channel : kMapChannels) {
        const std::string suffix = std::string("_") + channel;
        if (stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0)
            return std::make_pair(stem.substr(0, stem.size() - suffix.size()), std::string(channel));
    }
    return std::nullopt;
}

} // namespace

void export_svbrdf(const fs::path& dir, const std::string& name, const MaterialMaps& maps)
{
    render::validate(maps);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_png(map_path(dir, name, "diffuse"), channel_image(maps.diffuse, maps.size, 3));
    write_png(map_path(dir, name, "specular"), channel_image(maps.specular, maps.size, 3));
    write_png(map_path(dir, name, "roughness"), channel_image(maps.roughness, maps.size, 1));
    write_png(map_path(dir, name, "normal"), channel_image(maps.normal, maps.size, 3));
}

ImportResult import_svbrdf(const fs::path& dir)
{
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw IoError("not a readable directory: " + dir.string());
    std::map<std::string, int> names;
    fs::directory_iterator it(dir, ec);
    if (ec)
        throw IoError("cannot list " + dir.string() + ": " + ec.message());
    for (const auto& entry : it)
        if (entry.is_regular_file())
            if (auto parts = split_name(entry.path()))
                ++names[parts->first];

    ImportResult result;
    for (const auto& [name, count] : names) {
        try {
            result.materials.push_back({name, read_quadruple(dir, name)});
        } catch (const Error& e) {
            result.errors.push_back({name, e.what()});
        }
    }
    return result;
}

MaterialMaps load_material(const fs::path& dir, const std::string& name)
{
    try {
        return read_quadruple(dir, name);
    } catch (const Error& e) {
        throw IoError("material '" + name + "' in " + dir.string() + ": " + e.what());
    }
}

} // namespace matforge::dataset
