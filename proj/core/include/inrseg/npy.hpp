#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "inrseg/tensor.hpp"

namespace inrseg {

// NPY v1.0 files: magic "\x93NUMPY", version 1.0, little-endian u16 header
// length, then an ASCII dict {'descr': ..., 'fortran_order': False, 'shape': (...), }
// padded with spaces and a trailing newline to a multiple of 64 bytes.
// Only C-order arrays are supported.

enum class NpyDtype { kFloat32, kFloat64, kUint8 };

struct NpyHeader {
  NpyDtype dtype = NpyDtype::kFloat32;
  Shape shape;
};

void write_npy(const std::filesystem::path& path, const DenseArray& array,
               NpyDtype dtype = NpyDtype::kFloat32);
void write_npy_u8(const std::filesystem::path& path, std::span<const std::uint8_t> values,
                  const Shape& shape);

NpyHeader read_npy_header(const std::filesystem::path& path);
// Reads '<f4' or '<f8' data. Throws MissingFileError / NpyFormatError.
DenseArray read_npy_float(const std::filesystem::path& path);
// Reads '|u1' data; `shape` receives the stored extents.
std::vector<std::uint8_t> read_npy_u8(const std::filesystem::path& path, Shape& shape);

}  // namespace inrseg
