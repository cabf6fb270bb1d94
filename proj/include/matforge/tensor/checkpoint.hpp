#pragma once

// Binary checkpoint, all integers little-endian:
//
//   "MFCK"                      4 bytes magic
//   version          u32        currently 1
//   record_count     u32
//   record_count x {
//     name_length    u32
//     name           name_length bytes of UTF-8
//     rank           u32
//     extents        rank x u32
//     data           product(extents) x f32 (IEEE-754 binary32)
//   }
//
// Nothing may follow the last record.

#include "matforge/tensor/parameter.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace matforge::tensor {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedArray> records);
// Throws IoError naming the first offending record on any corruption.
std::vector<NamedArray> decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedArray> records);
std::vector<NamedArray> load_checkpoint(const std::filesystem::path& path);

} // namespace matforge::tensor
