#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace inrseg {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_product(const Shape& shape);

/// Row-major n-dimensional array of doubles.
///
/// A rank-0 array (empty shape) holds a single scalar. Extents are normally
/// positive; a zero extent is accepted so that empty vectors can exist.
class DenseArray {
 public:
  DenseArray() = default;
  explicit DenseArray(Shape shape, double fill = 0.0);
  DenseArray(Shape shape, std::vector<double> values);

  static DenseArray scalar(double value);
  static DenseArray vector(std::initializer_list<double> values);
  static DenseArray matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t extent(std::size_t axis) const;
  Shape strides() const;

  // rank-2 helpers
  std::size_t rows() const { return extent(0); }
  std::size_t cols() const { return extent(1); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  std::size_t flat_index(std::span<const std::size_t> index) const;
  double& at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  // rank-2 fast path, no bounds checks
  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  DenseArray reshaped(Shape shape) const;
  void fill(double value);

  friend bool operator==(const DenseArray& a, const DenseArray& b) = default;

 private:
  Shape shape_{0};
  std::vector<double> data_;
};

// --- linear algebra -------------------------------------------------------

DenseArray matmul(const DenseArray& a, const DenseArray& b);
// aᵀ·b without materializing the transpose.
DenseArray matmul_tn(const DenseArray& a, const DenseArray& b);
// a·bᵀ without materializing the transpose.
DenseArray matmul_nt(const DenseArray& a, const DenseArray& b);
DenseArray transpose(const DenseArray& a);
// Rows [begin, end) of a rank-2 array.
DenseArray slice_rows(const DenseArray& a, std::size_t begin, std::size_t end);

// --- reductions -----------------------------------------------------------

DenseArray reduce_sum(const DenseArray& a, std::optional<std::size_t> axis = std::nullopt);
DenseArray reduce_mean(const DenseArray& a, std::optional<std::size_t> axis = std::nullopt);

// --- elementwise ----------------------------------------------------------

enum class BinaryOp { kAdd, kSub, kMul, kDiv, kMax };
enum class UnaryOp { kSin, kCos, kExp, kLog, kLeakyRelu };

// Shapes must match, or one side must hold exactly one element (scalar broadcast).
DenseArray elementwise(const DenseArray& a, const DenseArray& b, BinaryOp op);
DenseArray map(const DenseArray& a, UnaryOp op, double leaky_slope = 0.01);

DenseArray operator+(const DenseArray& a, const DenseArray& b);
DenseArray operator-(const DenseArray& a, const DenseArray& b);
DenseArray operator*(const DenseArray& a, const DenseArray& b);
DenseArray operator/(const DenseArray& a, const DenseArray& b);

// Trailing-axis bias broadcast: out[i, j] = a[i, j] + bias[j].
DenseArray add_row_vector(const DenseArray& a, const DenseArray& bias);

// In-place variants. Single writer: the caller owns `y` exclusively.
void axpy_inplace(DenseArray& y, double alpha, const DenseArray& x);
void scale_inplace(DenseArray& y, double alpha);

bool all_finite(const DenseArray& a);

/// s[i] = sin(x[i]), c[i] = cos(x[i]) for n values, within a few ulp of the
/// libm results. Arguments are reduced modulo pi/2 in three parts; values with
/// |x| >= 1e5 or non-finite values go through std::sin / std::cos.
void sin_cos(const double* x, std::size_t n, double* s, double* c);
double max_abs_diff(const DenseArray& a, const DenseArray& b);

}  // namespace inrseg
