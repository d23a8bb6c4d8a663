#include "inrseg/augment.hpp"

#include <cmath>
#include <numbers>

#include "inrseg/errors.hpp"

namespace inrseg {

Sample augment_rigid(const Sample& sample, double rotation_deg,
                     std::array<double, 2> translation_px) {
  if (sample.dims() != 2) throw InputError("augment_rigid: only 2D samples are supported");
  const std::size_t rows = sample.extents[0], cols = sample.extents[1];
  const std::size_t ch = sample.channels();
  const double cy = 0.5 * static_cast<double>(rows - 1);
  const double cx = 0.5 * static_cast<double>(cols - 1);
  const double a = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a), s = std::sin(a);

  Sample out = sample;
  out.image.fill(0.0);
  auto pixel = [&](long r, long q, std::size_t k) -> double {
    if (r < 0 || q < 0 || r >= static_cast<long>(rows) || q >= static_cast<long>(cols)) return 0.0;
    return sample.image[(static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(q)) * ch + k];
  };

  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t q = 0; q < cols; ++q) {
      // inverse map: undo the translation, then the rotation
      const double y = static_cast<double>(r) - translation_px[0] - cy;
      const double x = static_cast<double>(q) - translation_px[1] - cx;
      const double sy = c * y - s * x + cy;
      const double sx = s * y + c * x + cx;

      const long y0 = static_cast<long>(std::floor(sy));
      const long x0 = static_cast<long>(std::floor(sx));
      const double fy = sy - static_cast<double>(y0);
      const double fx = sx - static_cast<double>(x0);
      const std::size_t p = r * cols + q;
      for (std::size_t k = 0; k < ch; ++k) {
        out.image[p * ch + k] = (1 - fy) * ((1 - fx) * pixel(y0, x0, k) + fx * pixel(y0, x0 + 1, k)) +
                                fy * ((1 - fx) * pixel(y0 + 1, x0, k) + fx * pixel(y0 + 1, x0 + 1, k));
      }
      const long ny = std::lround(sy), nx = std::lround(sx);
      out.mask[p] = (ny < 0 || nx < 0 || ny >= static_cast<long>(rows) || nx >= static_cast<long>(cols))
                        ? 0
                        : sample.mask[static_cast<std::size_t>(ny) * cols + static_cast<std::size_t>(nx)];
    }
  }
  return out;
}

}  // namespace inrseg
