#include "inrseg/report_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "inrseg/errors.hpp"

namespace inrseg {

std::filesystem::path artifact_path(const std::filesystem::path& dir, const std::string& subject,
                                    const std::string& kind, const std::string& ext) {
  return dir / (subject + "_" + kind + "." + ext);
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> header,
                     bool append)
    : columns_(header.size()) {
  const bool existed = append && std::filesystem::exists(path);
  out_.open(path, append ? std::ios::app : std::ios::trunc);
  if (!out_) throw DataError("cannot write " + path.string());
  if (!existed) {
    std::size_t i = 0;
    for (const std::string& h : header) out_ << (i++ ? "," : "") << h;
    out_ << '\n';
  }
}

CsvWriter& CsvWriter::cell(const std::string& text) {
  if (in_row_ == columns_) throw InputError("CsvWriter: too many cells in row");
  out_ << (in_row_++ ? "," : "") << text;
  return *this;
}

CsvWriter& CsvWriter::cell(double value) { return cell(format_number(value)); }

CsvWriter& CsvWriter::cell(std::uint64_t value) { return cell(std::to_string(value)); }

CsvWriter& CsvWriter::empty() { return cell(std::string()); }

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw InputError("CsvWriter: row has the wrong number of cells");
  out_ << '\n';
  out_.flush();
  in_row_ = 0;
}

void write_pgm(const std::filesystem::path& path, const DenseArray& image) {
  if (image.rank() < 2 || (image.rank() == 3 && image.extent(2) != 1) || image.rank() > 3)
    throw DimensionError("write_pgm: expected a 2D image, got " + shape_to_string(image.shape()));
  const std::size_t rows = image.extent(0), cols = image.extent(1);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << cols << ' ' << rows << "\n255\n";
  std::vector<char> bytes(rows * cols);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const double v = std::isfinite(image[i]) ? std::clamp(image[i], 0.0, 1.0) : 0.0;
    bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v)));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_label_pgm(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels,
                     std::size_t rows, std::size_t cols, std::size_t num_classes) {
  if (labels.size() != rows * cols) throw DimensionError("write_label_pgm: label count");
  DenseArray img(Shape{rows, cols});
  const double scale = num_classes > 1 ? 1.0 / static_cast<double>(num_classes - 1) : 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) img[i] = labels[i] * scale;
  write_pgm(path, img);
}

DenseArray middle_slice(const DenseArray& volume) {
  if (volume.rank() == 2) return volume;
  if (volume.rank() == 4 && volume.extent(3) == 1)
    return middle_slice(volume.reshaped(Shape{volume.extent(0), volume.extent(1), volume.extent(2)}));
  if (volume.rank() != 3) throw DimensionError("middle_slice: " + shape_to_string(volume.shape()));
  const std::size_t x = volume.extent(0) / 2, ny = volume.extent(1), nz = volume.extent(2);
  DenseArray out(Shape{ny, nz});
  std::copy_n(volume.data() + x * ny * nz, ny * nz, out.data());
  return out;
}

}  // namespace inrseg
