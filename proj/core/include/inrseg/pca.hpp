#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "inrseg/tensor.hpp"

namespace inrseg {

struct PcaOptions {
  std::size_t max_iterations = 20000;  // per component
  double eigenvalue_tol = 1e-10;       // relative change between iterations
  double vector_tol = 1e-13;           // change of the unit eigenvector estimate
  std::uint64_t seed = 0x5ca1ab1e;     // start vectors
};

struct PcaResult {
  std::size_t k = 0;
  std::vector<double> eigenvalues;       // descending, non-negative
  std::vector<double> explained_ratio;   // eigenvalue / total variance
  DenseArray components;                 // k x h, rows are unit eigenvectors
  DenseArray projections;                // n x k, centered features times components
  std::vector<DenseArray> maps;          // per component: projections min-max scaled to [0, 1]
  DenseArray mean;                       // h
};

/// Top-k principal components of the rows of `features` (n x h). Uses power
/// iteration with deflation on the h x h covariance, each component started
/// from a seeded random vector. Each component's sign is fixed so its largest
/// absolute entry is positive. `map_extents`, if given, reshapes each spatial
/// map (n must equal their product). Throws InputError unless n > k >= 1 and k < h.
PcaResult pca_features(const DenseArray& features, std::size_t k, const Shape& map_extents = {},
                       const PcaOptions& options = {});

// Sample covariance (divides by n - 1) of mean-centered rows.
DenseArray covariance(const DenseArray& features, DenseArray* mean_out = nullptr);

}  // namespace inrseg
