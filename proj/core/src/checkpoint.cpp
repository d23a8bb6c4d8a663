#include "inrseg/checkpoint.hpp"

#include <fstream>
#include <string>

#include "byte_order.hpp"
#include "inrseg/errors.hpp"

namespace inrseg {
namespace {

using detail::read_le;
using detail::write_le;

constexpr char kMagic[4] = {'M', 'S', 'E', 'G'};
constexpr std::uint32_t kMaxRank = 8;

void write_array(std::ostream& os, const DenseArray& a) {
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.rank()));
  for (std::size_t e : a.shape()) write_le<std::uint64_t>(os, e);
  for (double v : a.values()) write_le<float>(os, static_cast<float>(v));
}

DenseArray read_array(std::istream& is, const std::string& where) {
  const auto rank = read_le<std::uint32_t>(is);
  if (rank > kMaxRank) throw DataError(where + ": implausible array rank " + std::to_string(rank));
  Shape shape(rank);
  std::uint64_t count = 1;
  for (auto& e : shape) {
    e = static_cast<std::size_t>(read_le<std::uint64_t>(is));
    count *= e;
    if (count > (std::uint64_t{1} << 34)) throw DataError(where + ": array too large");
  }
  DenseArray a(shape);
  for (double& v : a.values()) v = static_cast<double>(read_le<float>(is));
  return a;
}

void expect_shape(const DenseArray& a, const Shape& s, const std::string& what) {
  if (a.shape() != s) {
    throw DataError("checkpoint: " + what + " has shape " + shape_to_string(a.shape()) +
                    ", expected " + shape_to_string(s));
  }
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data) {
  const SirenConfig& c = data.model.config;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os.write(kMagic, 4);
  write_le<std::uint32_t>(os, kCheckpointVersion);
  for (std::size_t v : {c.input_dim, c.output_dim, c.num_layers, c.hidden_width, c.num_classes,
                        c.head_hidden_width})
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(v));
  write_le<double>(os, c.omega0);
  write_le<double>(os, c.leaky_slope);
  write_le<std::uint64_t>(os, data.meta_step);
  const auto tensors = param_tensors(data.model);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(data.extra.size()));
  for (const DenseArray* t : tensors) write_array(os, *t);
  for (const DenseArray& t : data.extra) write_array(os, t);
  if (!os) throw DataError("write failed for " + path.string());
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingFileError("checkpoint not found: " + path.string());
  const std::string where = "checkpoint " + path.string();
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != std::string(kMagic, 4))
    throw DataError(where + ": bad magic (not an MSEG file)");
  const auto version = read_le<std::uint32_t>(is);
  if (version != kCheckpointVersion)
    throw DataError(where + ": unsupported format version " + std::to_string(version));

  CheckpointData data;
  SirenConfig& c = data.model.config;
  c.input_dim = read_le<std::uint32_t>(is);
  c.output_dim = read_le<std::uint32_t>(is);
  c.num_layers = read_le<std::uint32_t>(is);
  c.hidden_width = read_le<std::uint32_t>(is);
  c.num_classes = read_le<std::uint32_t>(is);
  c.head_hidden_width = read_le<std::uint32_t>(is);
  c.omega0 = read_le<double>(is);
  c.leaky_slope = read_le<double>(is);
  try {
    c.validate();
  } catch (const InputError& e) {
    throw DataError(where + ": " + e.what());
  }
  data.meta_step = read_le<std::uint64_t>(is);
  const auto model_arrays = read_le<std::uint32_t>(is);
  const auto extra_arrays = read_le<std::uint32_t>(is);
  if (model_arrays != 2 * c.num_layers + 4)
    throw DataError(where + ": expected " + std::to_string(2 * c.num_layers + 4) +
                    " model arrays, found " + std::to_string(model_arrays));

  const std::size_t h = c.hidden_width;
  data.model.inr.layers.resize(c.num_layers);
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    const std::size_t in = l == 0 ? c.input_dim : h;
    const std::size_t out = l + 1 == c.num_layers ? c.output_dim : h;
    Linear& layer = data.model.inr.layers[l];
    layer.weight = read_array(is, where);
    layer.bias = read_array(is, where);
    expect_shape(layer.weight, {out, in}, "INR weight " + std::to_string(l));
    expect_shape(layer.bias, {out}, "INR bias " + std::to_string(l));
  }
  SegHeadParams& head = data.model.head;
  head.hidden.weight = read_array(is, where);
  head.hidden.bias = read_array(is, where);
  head.output.weight = read_array(is, where);
  head.output.bias = read_array(is, where);
  expect_shape(head.hidden.weight, {c.head_hidden_width, h}, "head hidden weight");
  expect_shape(head.hidden.bias, {c.head_hidden_width}, "head hidden bias");
  expect_shape(head.output.weight, {c.num_classes, c.head_hidden_width}, "head output weight");
  expect_shape(head.output.bias, {c.num_classes}, "head output bias");
  for (std::uint32_t i = 0; i < extra_arrays; ++i) data.extra.push_back(read_array(is, where));
  return data;
}

}  // namespace inrseg
