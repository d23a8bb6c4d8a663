#include "inrseg/npy.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "byte_order.hpp"
#include "inrseg/errors.hpp"

namespace inrseg {
namespace {

using detail::read_le;
using detail::write_le;

constexpr char kMagic[] = "\x93NUMPY";

const char* descr_of(NpyDtype t) {
  switch (t) {
    case NpyDtype::kFloat32: return "<f4";
    case NpyDtype::kFloat64: return "<f8";
    case NpyDtype::kUint8: return "|u1";
  }
  return "";
}

std::ofstream open_and_write_header(const std::filesystem::path& path, NpyDtype dtype,
                                    const Shape& shape) {
  std::ostringstream dict;
  dict << "{'descr': '" << descr_of(dtype) << "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    dict << shape[i];
    if (shape.size() == 1 || i + 1 < shape.size()) dict << ",";
    if (i + 1 < shape.size()) dict << " ";
  }
  dict << "), }";
  std::string header = dict.str();
  const std::size_t prefix = 10;  // magic(6) + version(2) + header length(2)
  std::size_t total = prefix + header.size() + 1;
  const std::size_t padded = (total + 63) / 64 * 64;
  header.append(padded - total, ' ');
  header.push_back('\n');

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os.write(kMagic, 6);
  os.put(1);
  os.put(0);
  write_le<std::uint16_t>(os, static_cast<std::uint16_t>(header.size()));
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  return os;
}

struct OpenedNpy {
  std::ifstream stream;
  NpyHeader header;
};

OpenedNpy open_and_read_header(const std::filesystem::path& path) {
  OpenedNpy f{std::ifstream(path, std::ios::binary), {}};
  if (!f.stream) throw MissingFileError("file not found: " + path.string());
  const std::string where = path.string();
  char magic[6];
  if (!f.stream.read(magic, 6) || std::string(magic, 6) != std::string(kMagic, 6))
    throw NpyFormatError(where + ": not an NPY file (bad magic)");
  const int major = f.stream.get();
  const int minor = f.stream.get();
  if (major != 1 || minor != 0)
    throw NpyFormatError(where + ": unsupported NPY version " + std::to_string(major) + "." +
                         std::to_string(minor));
  std::uint16_t len;
  try {
    len = read_le<std::uint16_t>(f.stream);
  } catch (const DataError&) {
    throw NpyFormatError(where + ": truncated header");
  }
  std::string header(len, '\0');
  if (!f.stream.read(header.data(), len)) throw NpyFormatError(where + ": truncated header");

  static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
  static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
  static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
  std::smatch m;
  if (!std::regex_search(header, m, descr_re)) throw NpyFormatError(where + ": header lacks descr");
  const std::string descr = m[1];
  if (descr == "<f4") {
    f.header.dtype = NpyDtype::kFloat32;
  } else if (descr == "<f8") {
    f.header.dtype = NpyDtype::kFloat64;
  } else if (descr == "|u1" || descr == "<u1") {
    f.header.dtype = NpyDtype::kUint8;
  } else {
    throw NpyFormatError(where + ": unsupported dtype '" + descr + "'");
  }
  if (!std::regex_search(header, m, order_re))
    throw NpyFormatError(where + ": header lacks fortran_order");
  if (m[1] == "True") throw NpyFormatError(where + ": Fortran-ordered arrays are not supported");
  if (!std::regex_search(header, m, shape_re)) throw NpyFormatError(where + ": header lacks shape");
  std::stringstream dims(m[1]);
  std::string tok;
  while (std::getline(dims, tok, ',')) {
    const auto first = tok.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    try {
      f.header.shape.push_back(static_cast<std::size_t>(std::stoull(tok.substr(first))));
    } catch (const std::exception&) {
      throw NpyFormatError(where + ": malformed shape entry '" + tok + "'");
    }
  }
  return f;
}

}  // namespace

void write_npy(const std::filesystem::path& path, const DenseArray& array, NpyDtype dtype) {
  if (dtype == NpyDtype::kUint8) throw InputError("write_npy: use write_npy_u8 for byte data");
  std::ofstream os = open_and_write_header(path, dtype, array.shape());
  for (double v : array.values()) {
    if (dtype == NpyDtype::kFloat32) {
      write_le<float>(os, static_cast<float>(v));
    } else {
      write_le<double>(os, v);
    }
  }
  if (!os) throw DataError("write failed for " + path.string());
}

void write_npy_u8(const std::filesystem::path& path, std::span<const std::uint8_t> values,
                  const Shape& shape) {
  if (shape_product(shape) != values.size())
    throw DimensionError("write_npy_u8: " + std::to_string(values.size()) +
                         " values do not fill shape " + shape_to_string(shape));
  std::ofstream os = open_and_write_header(path, NpyDtype::kUint8, shape);
  os.write(reinterpret_cast<const char*>(values.data()),
           static_cast<std::streamsize>(values.size()));
  if (!os) throw DataError("write failed for " + path.string());
}

NpyHeader read_npy_header(const std::filesystem::path& path) {
  return open_and_read_header(path).header;
}

DenseArray read_npy_float(const std::filesystem::path& path) {
  OpenedNpy f = open_and_read_header(path);
  if (f.header.dtype == NpyDtype::kUint8)
    throw NpyFormatError(path.string() + ": expected float data ('<f4' or '<f8'), found '|u1'");
  DenseArray a(f.header.shape);
  try {
    for (double& v : a.values()) {
      v = f.header.dtype == NpyDtype::kFloat32 ? static_cast<double>(read_le<float>(f.stream))
                                               : read_le<double>(f.stream);
    }
  } catch (const DataError&) {
    throw NpyFormatError(path.string() + ": data shorter than header shape " +
                         shape_to_string(f.header.shape));
  }
  return a;
}

std::vector<std::uint8_t> read_npy_u8(const std::filesystem::path& path, Shape& shape) {
  OpenedNpy f = open_and_read_header(path);
  if (f.header.dtype != NpyDtype::kUint8)
    throw NpyFormatError(path.string() + ": expected unsigned 8-bit data ('|u1')");
  std::vector<std::uint8_t> out(shape_product(f.header.shape));
  if (!f.stream.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size())))
    throw NpyFormatError(path.string() + ": data shorter than header shape " +
                         shape_to_string(f.header.shape));
  shape = f.header.shape;
  return out;
}

}  // namespace inrseg
