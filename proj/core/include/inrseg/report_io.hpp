#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "inrseg/tensor.hpp"

namespace inrseg {

// <dir>/<subject>_<kind>.<ext>
std::filesystem::path artifact_path(const std::filesystem::path& dir, const std::string& subject,
                                    const std::string& kind, const std::string& ext);

// Shortest decimal text that reads back to the same double.
std::string format_number(double value);

/// Comma-separated table writer. Cells are written verbatim; numbers go
/// through format_number so reruns produce identical bytes.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> header,
            bool append = false);

  CsvWriter& cell(const std::string& text);
  CsvWriter& cell(double value);
  CsvWriter& cell(std::uint64_t value);
  CsvWriter& empty();
  void end_row();

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

/// 8-bit binary PGM (P5). `image` is rows x cols (or rows x cols x 1) with
/// values in [0, 1]; each is mapped to round(255 v), clamped.
void write_pgm(const std::filesystem::path& path, const DenseArray& image);

// Label map as PGM, class k drawn at gray level round(255 k / (C - 1)).
void write_label_pgm(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels,
                     std::size_t rows, std::size_t cols, std::size_t num_classes);

/// The 2D slice through the middle of the first axis of a 3D array
/// (extents x, y, z -> y x z); 2D input is returned unchanged.
DenseArray middle_slice(const DenseArray& volume);

}  // namespace inrseg
