#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "matteforge/engine/tensor.hpp"

namespace mf::engine {

// Named-tensor archive, all integers little-endian:
//   "MFCK" | u32 version | u64 entry count
//   per entry: u32 name length | UTF-8 name | u32 rank | u64 dims[rank] | f32 data[numel]
// Optimizer state lives under the reserved "opt/" prefix.

inline constexpr char kArchiveMagic[4] = {'M', 'F', 'C', 'K'};
inline constexpr std::uint32_t kArchiveVersion = 1;
inline constexpr std::string_view kOptimizerPrefix = "opt/";

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<float> data;
};

void write_archive(const std::filesystem::path& path, const std::vector<NamedArray>& entries);

/// Throws DataError on a bad magic, unknown version, truncation or
/// inconsistent sizes.
std::vector<NamedArray> read_archive(const std::filesystem::path& path);

const NamedArray* find_entry(const std::vector<NamedArray>& entries, std::string_view name);

}  // namespace mf::engine
