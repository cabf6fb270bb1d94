#include "matforge/tensor/checkpoint.hpp"

#include "matforge/core/error.hpp"
#include "matforge/core/png_io.hpp"

#include <bit>
#include <cstring>
#include <string>

namespace matforge::tensor {

namespace {

constexpr char kMagic[4] = {'M', 'F', 'C', 'K'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    }
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    bool has(std::size_t n) const { return bytes_.size() - offset_ >= n; }
    std::size_t remaining() const { return bytes_.size() - offset_; }

    std::uint32_t u32()
    {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes_[offset_ + i]) << (8 * i);
        }
        offset_ += 4;
        return v;
    }

    std::span<const std::uint8_t> take(std::size_t n)
    {
        auto s = bytes_.subspan(offset_, n);
        offset_ += n;
        return s;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t offset_ = 0;
};

} // namespace

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedArray> records)
{
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(records.size()));
    for (const auto& r : records) {
        if (element_count(r.shape) != r.data.size()) {
            throw ShapeError("checkpoint: record '" + r.name + "' data does not match shape " +
                             shape_string(r.shape));
        }
        put_u32(out, static_cast<std::uint32_t>(r.name.size()));
        out.insert(out.end(), r.name.begin(), r.name.end());
        put_u32(out, static_cast<std::uint32_t>(r.shape.size()));
        for (auto e : r.shape) {
            put_u32(out, static_cast<std::uint32_t>(e));
        }
        for (float f : r.data) {
            put_u32(out, std::bit_cast<std::uint32_t>(f));
        }
    }
    return out;
}

std::vector<NamedArray> decode_checkpoint(std::span<const std::uint8_t> bytes)
{
    Reader in(bytes);
    if (!in.has(12) || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw IoError("checkpoint: missing MFCK header");
    }
    in.take(4);
    const std::uint32_t version = in.u32();
    if (version != kCheckpointVersion) {
        throw IoError("checkpoint: unsupported version " + std::to_string(version));
    }
    const std::uint32_t count = in.u32();
    std::vector<NamedArray> records;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string where = "checkpoint: record " + std::to_string(i);
        if (!in.has(4)) {
            throw IoError(where + ": truncated before name length");
        }
        const std::uint32_t name_len = in.u32();
        if (!in.has(name_len)) {
            throw IoError(where + ": truncated name");
        }
        auto name_bytes = in.take(name_len);
        NamedArray r;
        r.name.assign(name_bytes.begin(), name_bytes.end());
        const std::string named = where + " ('" + r.name + "')";
        if (!in.has(4)) {
            throw IoError(named + ": truncated before rank");
        }
        const std::uint32_t rank = in.u32();
        if (rank > 8 || !in.has(4ull * rank)) {
            throw IoError(named + ": invalid or truncated extents");
        }
        std::size_t n = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            const std::uint32_t e = in.u32();
            if (e == 0) {
                throw IoError(named + ": zero extent");
            }
            r.shape.push_back(e);
            n *= e;
        }
        if (n > in.remaining() / 4) {
            throw IoError(named + ": truncated data");
        }
        r.data.resize(n);
        for (auto& f : r.data) {
            f = std::bit_cast<float>(in.u32());
        }
        records.push_back(std::move(r));
    }
    if (in.remaining() != 0) {
        throw IoError("checkpoint: " + std::to_string(in.remaining()) + " trailing bytes after last record");
    }
    return records;
}

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedArray> records)
{
    write_file(path, encode_checkpoint(records));
}

std::vector<NamedArray> load_checkpoint(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path)) {
        throw IoError("checkpoint not found: " + path.string());
    }
    try {
        return decode_checkpoint(read_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

} // namespace matforge::tensor
