#pragma once

#include "inrseg/tensor.hpp"

namespace inrseg {

// Evenly spaced coordinates in [-1, 1] per axis, enumerated row-major
// (last axis fastest). coords is (prod(extents) x d); column k holds axis k.
struct CoordGrid {
  Shape extents;
  DenseArray coords;

  std::size_t dims() const { return extents.size(); }
  std::size_t points() const { return coords.rows(); }
};

// Throws InputError if any extent is < 2.
CoordGrid make_grid(const Shape& extents);

}  // namespace inrseg
