#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "critflow/field.hpp"

namespace critflow {

// VFLD1 layout, all little-endian:
//   0  "VFLD1"
//   5  u32 dim (3)
//   9  u32 N
//   13 f64 L
//   21 u8 rank (0 scalar, 1 vector, 2 tensor)
//   22 f64 samples, component-major, C order over (i, j, k)
constexpr std::size_t vfld_header_size = 22;

std::vector<std::uint8_t> encode_field(const RealField& f);
// FormatError messages carry the byte offset of the first bad byte.
RealField decode_field(const std::vector<std::uint8_t>& bytes);

void save_field(const std::filesystem::path& path, const RealField& f);
RealField load_field(const std::filesystem::path& path);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace critflow
