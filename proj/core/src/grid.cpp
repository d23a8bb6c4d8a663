#include "inrseg/grid.hpp"

#include <string>

#include "inrseg/errors.hpp"

namespace inrseg {

CoordGrid make_grid(const Shape& extents) {
  if (extents.empty()) throw InputError("make_grid: no extents given");
  for (std::size_t e : extents) {
    if (e < 2) throw InputError("make_grid: every extent must be >= 2, got " + std::to_string(e));
  }
  const std::size_t d = extents.size();
  const std::size_t n = shape_product(extents);
  CoordGrid grid{extents, DenseArray(Shape{n, d})};
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t k = 0; k < d; ++k) {
      grid.coords(p, k) =
          -1.0 + 2.0 * static_cast<double>(idx[k]) / static_cast<double>(extents[k] - 1);
    }
    for (std::size_t k = d; k-- > 0;) {
      if (++idx[k] < extents[k]) break;
      idx[k] = 0;
    }
  }
  return grid;
}

}  // namespace inrseg
