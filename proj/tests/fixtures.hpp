#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "inrseg/dataset.hpp"
#include "inrseg/grid.hpp"
#include "inrseg/rng.hpp"
#include "inrseg/siren.hpp"
#include "inrseg/synthetic.hpp"

namespace fixtures {

using namespace inrseg;

inline SirenConfig tiny_config(std::size_t d = 2, std::size_t h = 8, std::size_t L = 3,
                               std::size_t C = 3) {
  SirenConfig c;
  c.input_dim = d;
  c.num_layers = L;
  c.hidden_width = h;
  c.head_hidden_width = h;
  c.num_classes = C;
  return c;
}

// Model with nonzero biases so bias gradients are exercised too.
inline SirenModel tiny_model(std::uint64_t seed, const SirenConfig& c = tiny_config()) {
  Rng rng(seed);
  SirenModel m = siren_init(c, rng);
  for (DenseArray* p : param_tensors(m))
    if (p->rank() == 1)
      for (double& v : p->values()) v = rng.uniform(-0.3, 0.3);
  return m;
}

inline DenseArray random_coords(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  DenseArray x(Shape{n, d});
  for (double& v : x.values()) v = rng.uniform(-1.0, 1.0);
  return x;
}

inline std::vector<std::uint8_t> random_labels(std::size_t n, std::size_t C, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> l(n);
  for (auto& v : l) v = static_cast<std::uint8_t>(rng.index(C));
  return l;
}

inline SynthSpec small_spec(std::size_t extent = 24, std::size_t C = 4, std::uint64_t seed = 0) {
  SynthSpec s;
  s.extent = extent;
  s.num_classes = C;
  s.seed = seed;
  return s;
}

}  // namespace fixtures

namespace fixtures {

// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path p = std::filesystem::temp_directory_path() / ("inrseg_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace fixtures
