#include "inrseg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "inrseg/errors.hpp"
#include "inrseg/grid.hpp"
#include "inrseg/rng.hpp"

namespace inrseg {
namespace {

constexpr int kMaxAttempts = 64;

struct Ellipsoid {
  double center[3] = {0, 0, 0};
  double radius[3] = {1, 1, 1};
  double angle = 0.0;  // rotation in the axis-0 / axis-1 plane

  bool contains(const double* x, std::size_t d) const {
    const double dy = x[0] - center[0];
    const double dx = x[1] - center[1];
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = dx * c + dy * s;
    const double v = -dx * s + dy * c;
    double r = (v / radius[0]) * (v / radius[0]) + (u / radius[1]) * (u / radius[1]);
    if (d == 3) {
      const double w = (x[2] - center[2]) / radius[2];
      r += w * w;
    }
    return r <= 1.0;
  }
};

double jitter(Rng& rng, double a) { return rng.uniform(-a, a); }

Sample draw_subject(const SynthSpec& spec, const CoordGrid& grid, Rng& rng) {
  const std::size_t d = spec.dims;
  const double cj = spec.center_jitter, rj = spec.radius_jitter, aj = spec.rotation_jitter;

  Ellipsoid body;
  for (std::size_t k = 0; k < d; ++k) body.center[k] = jitter(rng, cj);
  body.radius[0] = 0.6 + jitter(rng, rj);
  body.radius[1] = 0.75 + jitter(rng, rj);
  body.radius[2] = 0.7 + jitter(rng, rj);
  body.angle = jitter(rng, aj);

  Ellipsoid inner;
  for (std::size_t k = 0; k < d; ++k) inner.center[k] = body.center[k] + jitter(rng, 1.5 * cj);
  inner.radius[0] = 0.3 + jitter(rng, 0.75 * rj);
  inner.radius[1] = 0.42 + jitter(rng, rj);
  inner.radius[2] = 0.36 + jitter(rng, 0.75 * rj);
  inner.angle = jitter(rng, 2.0 * aj);

  const std::size_t blobs = spec.num_classes > 3 ? spec.num_classes - 3 : 0;
  std::vector<Ellipsoid> blob(blobs);
  for (std::size_t b = 0; b < blobs; ++b) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(b) / static_cast<double>(blobs);
    const double dist = blobs == 1 ? 0.2 : 0.22;
    blob[b].center[0] = inner.center[0] + dist * 0.7 * std::sin(phase) + jitter(rng, 1.25 * cj);
    blob[b].center[1] = inner.center[1] + dist * std::cos(phase) + jitter(rng, 1.25 * cj);
    if (d == 3) blob[b].center[2] = inner.center[2] + jitter(rng, cj);
    const double scale = blobs == 1 ? 1.0 : 0.75;
    blob[b].radius[0] = scale * (0.09 + jitter(rng, 0.375 * rj));
    blob[b].radius[1] = scale * (0.12 + jitter(rng, 0.5 * rj));
    blob[b].radius[2] = scale * (0.11 + jitter(rng, 0.5 * rj));
    blob[b].angle = jitter(rng, 3.0 * aj);
  }

  std::vector<double> level(spec.num_classes);
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    const auto [lo, hi] = class_band(spec, k);
    level[k] = rng.uniform(lo, hi);
  }

  Sample s;
  s.extents = grid.extents;
  s.num_classes = spec.num_classes;
  const std::size_t n = grid.points();
  s.mask.assign(n, 0);
  Shape image_shape = grid.extents;
  image_shape.push_back(1);
  s.image = DenseArray(image_shape);
  for (std::size_t p = 0; p < n; ++p) {
    const double* x = grid.coords.data() + p * d;
    std::uint8_t cls = 0;
    if (body.contains(x, d)) {
      cls = 1;
      if (spec.num_classes > 2 && inner.contains(x, d)) {
        cls = 2;
        for (std::size_t b = 0; b < blobs; ++b)
          if (blob[b].contains(x, d)) cls = static_cast<std::uint8_t>(3 + b);
      }
    }
    s.mask[p] = cls;
    const double noisy = level[cls] + (spec.noise_sigma > 0.0 ? spec.noise_sigma * rng.normal() : 0.0);
    s.image[p] = std::clamp(noisy, 0.0, 1.0);
  }
  return s;
}

bool has_all_classes(const Sample& s) {
  std::vector<bool> seen(s.num_classes, false);
  for (std::uint8_t v : s.mask) seen[v] = true;
  for (bool b : seen)
    if (!b) return false;
  return true;
}

}  // namespace

void SynthSpec::validate() const {
  if (dims != 2 && dims != 3) throw InputError("SynthSpec: dims must be 2 or 3");
  if (extent < 8) throw InputError("SynthSpec: extent must be >= 8");
  if (num_classes < 2 || num_classes > 12)
    throw InputError("SynthSpec: num_classes must be in [2, 12]");
  if (noise_sigma < 0.0) throw InputError("SynthSpec: noise_sigma must be >= 0");
}

std::pair<double, double> class_band(const SynthSpec& spec, std::size_t k) {
  const double spacing = 0.9 / static_cast<double>(spec.num_classes - 1);
  const double center = 0.05 + spacing * static_cast<double>(k);
  const double half = 0.15 * spacing;
  return {center - half, center + half};
}

std::vector<Sample> generate_synthetic(const SynthSpec& spec, std::size_t n_train,
                                       std::size_t n_val, std::size_t n_test) {
  spec.validate();
  const CoordGrid grid = make_grid(Shape(spec.dims, spec.extent));
  std::vector<Sample> out;
  const std::size_t total = n_train + n_val + n_test;
  out.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    Rng rng = Rng::for_stream(spec.seed, i);
    Sample s = draw_subject(spec, grid, rng);
    for (int attempt = 1; !has_all_classes(s); ++attempt) {
      if (attempt >= kMaxAttempts)
        throw InputError("generate_synthetic: could not place every class; extent too small?");
      s = draw_subject(spec, grid, rng);
    }
    char id[32];
    std::snprintf(id, sizeof id, "synth_%04zu", i);
    s.id = id;
    s.split = i < n_train ? Split::kTrain : (i < n_train + n_val ? Split::kVal : Split::kTest);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace inrseg
