#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "inrseg/dataset.hpp"

namespace inrseg {

/// Phantom generator parameters. Each subject is a jittered "body" ellipse
/// (class 1) containing an inner ellipse (class 2) which in turn holds one
/// small blob per remaining class. Shapes are clipped to their parent, so a
/// pixel's class is the innermost shape covering it. Each class gets a constant
/// per-subject intensity drawn from its own band; bands never overlap.
/// In 3D the shapes are ellipsoids, rotated in the plane of the first two axes.
struct SynthSpec {
  std::size_t dims = 2;
  std::size_t extent = 64;  // per axis; 32 is the usual choice in 3D
  std::size_t num_classes = 4;
  double noise_sigma = 0.02;
  std::uint64_t seed = 0;
  double center_jitter = 0.05;     // in normalized [-1, 1] units
  double radius_jitter = 0.05;
  double rotation_jitter = 0.125;  // radians, scaled up for inner shapes

  void validate() const;  // throws InputError
};

// Closed intensity band [lo, hi] of class k before noise.
std::pair<double, double> class_band(const SynthSpec& spec, std::size_t k);

/// Subjects are numbered consecutively (train, then val, then test); subject i is
/// drawn from its own stream of the seed, so adding subjects never changes
/// earlier ones. Images are clamped to [0, 1] but not min-max normalized.
std::vector<Sample> generate_synthetic(const SynthSpec& spec, std::size_t n_train,
                                       std::size_t n_val, std::size_t n_test);

}  // namespace inrseg
