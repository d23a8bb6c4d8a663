#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "inrseg/siren.hpp"

namespace inrseg {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Parameter container, all fields little-endian:
///
///   char[4]  magic "MSEG"
///   u32      format version (1)
///   u32      input_dim, output_dim, num_layers, hidden_width, num_classes, head_hidden_width
///   f64      omega0, leaky_slope
///   u64      meta_step
///   u32      model array count (2 * num_layers + 4)
///   u32      extra array count
///   arrays   each: u32 rank, u64 extents[rank], f32 values (row-major)
///
/// Model arrays come first: INR layers as (weight, bias) pairs in order, then
/// head hidden weight, hidden bias, output weight, output bias. Extra arrays
/// carry optional optimizer state. Values are stored as 32-bit floats, so a
/// double-precision model is rounded on write; float -> double -> float is exact,
/// so re-saving a loaded model reproduces the same bytes.
struct CheckpointData {
  SirenModel model;
  std::uint64_t meta_step = 0;
  std::vector<DenseArray> extra;
};

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data);
// Throws MissingFileError / DataError (wrong magic, unsupported version, truncated, bad shapes).
CheckpointData read_checkpoint(const std::filesystem::path& path);

}  // namespace inrseg
