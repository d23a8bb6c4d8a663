#include "inrseg/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "inrseg/errors.hpp"

namespace inrseg {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const DenseArray& a) {
  return ConstMap(a.data(), static_cast<Eigen::Index>(a.rows()),
                  static_cast<Eigen::Index>(a.cols()));
}

void require_rank2(const DenseArray& a, const char* op) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected rank-2 array, got shape " +
                         shape_to_string(a.shape()));
  }
}

[[noreturn]] void throw_pair(const char* op, const DenseArray& a, const DenseArray& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_to_string(a.shape()) +
                       " and " + shape_to_string(b.shape()));
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

DenseArray::DenseArray(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

DenseArray::DenseArray(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != shape_product(shape_)) {
    throw DimensionError("DenseArray: " + std::to_string(data_.size()) +
                         " values do not fill shape " + shape_to_string(shape_));
  }
}

DenseArray DenseArray::scalar(double value) { return DenseArray(Shape{}, std::vector{value}); }

DenseArray DenseArray::vector(std::initializer_list<double> values) {
  return DenseArray(Shape{values.size()}, std::vector<double>(values));
}

DenseArray DenseArray::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> flat;
  flat.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("DenseArray::matrix: ragged rows");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return DenseArray(Shape{r, c}, std::move(flat));
}

std::size_t DenseArray::extent(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_to_string(shape_));
  }
  return shape_[axis];
}

Shape DenseArray::strides() const {
  Shape s(shape_.size(), 1);
  for (std::size_t i = shape_.size(); i-- > 1;) s[i - 1] = s[i] * shape_[i];
  return s;
}

std::size_t DenseArray::flat_index(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw DimensionError("index rank " + std::to_string(index.size()) + " does not match shape " +
                         shape_to_string(shape_));
  }
  std::size_t flat = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= shape_[i]) {
      throw DimensionError("index out of bounds for shape " + shape_to_string(shape_));
    }
    flat = flat * shape_[i] + index[i];
  }
  return flat;
}

double& DenseArray::at(std::initializer_list<std::size_t> index) {
  return data_[flat_index(std::span(index.begin(), index.size()))];
}

double DenseArray::at(std::initializer_list<std::size_t> index) const {
  return data_[flat_index(std::span(index.begin(), index.size()))];
}

DenseArray DenseArray::reshaped(Shape shape) const {
  if (shape_product(shape) != data_.size()) {
    throw DimensionError("reshape " + shape_to_string(shape_) + " -> " + shape_to_string(shape));
  }
  return DenseArray(std::move(shape), data_);
}

void DenseArray::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

DenseArray matmul(const DenseArray& a, const DenseArray& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) throw_pair("matmul", a, b);
  DenseArray c(Shape{a.rows(), b.cols()});
  MutMap(c.data(), static_cast<Eigen::Index>(c.rows()), static_cast<Eigen::Index>(c.cols()))
      .noalias() = as_matrix(a) * as_matrix(b);
  return c;
}

DenseArray matmul_tn(const DenseArray& a, const DenseArray& b) {
  require_rank2(a, "matmul_tn");
  require_rank2(b, "matmul_tn");
  if (a.rows() != b.rows()) throw_pair("matmul_tn", a, b);
  DenseArray c(Shape{a.cols(), b.cols()});
  MutMap(c.data(), static_cast<Eigen::Index>(c.rows()), static_cast<Eigen::Index>(c.cols()))
      .noalias() = as_matrix(a).transpose() * as_matrix(b);
  return c;
}

DenseArray matmul_nt(const DenseArray& a, const DenseArray& b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  if (a.cols() != b.cols()) throw_pair("matmul_nt", a, b);
  DenseArray c(Shape{a.rows(), b.rows()});
  MutMap(c.data(), static_cast<Eigen::Index>(c.rows()), static_cast<Eigen::Index>(c.cols()))
      .noalias() = as_matrix(a) * as_matrix(b).transpose();
  return c;
}

DenseArray transpose(const DenseArray& a) {
  require_rank2(a, "transpose");
  DenseArray t(Shape{a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

DenseArray slice_rows(const DenseArray& a, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice_rows");
  if (begin > end || end > a.rows()) {
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of range for shape " + shape_to_string(a.shape()));
  }
  const std::size_t cols = a.cols();
  return DenseArray(Shape{end - begin, cols},
                    std::vector<double>(a.data() + begin * cols, a.data() + end * cols));
}

DenseArray reduce_sum(const DenseArray& a, std::optional<std::size_t> axis) {
  if (!axis) {
    double s = 0.0;
    for (double v : a.values()) s += v;
    return DenseArray::scalar(s);
  }
  if (*axis >= a.rank()) {
    throw DimensionError("reduce: axis " + std::to_string(*axis) + " out of range for shape " +
                         shape_to_string(a.shape()));
  }
  const Shape& shape = a.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < *axis; ++i) outer *= shape[i];
  for (std::size_t i = *axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t n = shape[*axis];

  Shape out_shape;
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (i != *axis) out_shape.push_back(shape[i]);
  DenseArray out(out_shape);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += a[(o * n + k) * inner + i];
  return out;
}

DenseArray reduce_mean(const DenseArray& a, std::optional<std::size_t> axis) {
  DenseArray s = reduce_sum(a, axis);
  const std::size_t count = axis ? a.shape()[*axis] : a.size();
  if (count == 0) return s;
  scale_inplace(s, 1.0 / static_cast<double>(count));
  return s;
}

DenseArray elementwise(const DenseArray& a, const DenseArray& b, BinaryOp op) {
  auto apply = [op](double x, double y) {
    switch (op) {
      case BinaryOp::kAdd: return x + y;
      case BinaryOp::kSub: return x - y;
      case BinaryOp::kMul: return x * y;
      case BinaryOp::kDiv: return x / y;
      case BinaryOp::kMax: return std::max(x, y);
    }
    return 0.0;
  };
  if (a.shape() == b.shape()) {
    DenseArray out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = apply(a[i], b[i]);
    return out;
  }
  if (b.size() == 1) {
    DenseArray out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = apply(a[i], b[0]);
    return out;
  }
  if (a.size() == 1) {
    DenseArray out(b.shape());
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = apply(a[0], b[i]);
    return out;
  }
  throw_pair("elementwise", a, b);
}

void sin_cos(const double* x, std::size_t n, double* s, double* c) {
  // pi/2 split into three pieces; the first has 33 significant bits so k * kPio2a
  // is exact for the quadrant counts reached below the fallback threshold.
  constexpr double kInvPio2 = 6.36619772367581382433e-01;
  constexpr double kPio2a = 1.57079632673412561417e+00;
  constexpr double kPio2b = 6.07710050630396597660e-11;
  constexpr double kPio2c = 2.02226624871116645580e-21;
  constexpr double kRound = 6755399441055744.0;  // 1.5 * 2^52
  constexpr double kLimit = 1e5;
  // minimax polynomials on [-pi/4, pi/4]
  constexpr double S1 = -1.66666666666666324348e-01, S2 = 8.33333333332248946124e-03,
                   S3 = -1.98412698298579493134e-04, S4 = 2.75573137070700676789e-06,
                   S5 = -2.50507602534068634195e-08, S6 = 1.58969099521155010221e-10;
  constexpr double C1 = 4.16666666666666019037e-02, C2 = -1.38888888888741095749e-03,
                   C3 = 2.48015872894767294178e-05, C4 = -2.75573143513906633035e-07,
                   C5 = 2.08757232129817482790e-09, C6 = -1.13596475577881948265e-11;

  std::size_t outside = 0;
  for (std::size_t i = 0; i < n; ++i) outside += !(std::abs(x[i]) < kLimit);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i];  // out-of-range lanes are recomputed below
    const double shifted = v * kInvPio2 + kRound;
    const double k = shifted - kRound;
    // low bits of the shifted value hold k mod 4 (two's complement)
    const std::uint64_t q = std::bit_cast<std::uint64_t>(shifted) & 3u;
    const double r = ((v - k * kPio2a) - k * kPio2b) - k * kPio2c;
    const double z = r * r;
    const double sp = r + r * z * (S1 + z * (S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)))));
    const double cp = 1.0 - 0.5 * z + z * z * (C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6)))));
    const std::uint64_t odd = 0 - (q & 1u);  // all ones in odd quadrants
    const std::uint64_t sb = std::bit_cast<std::uint64_t>(sp), cb = std::bit_cast<std::uint64_t>(cp);
    const std::uint64_t sv = (sb & ~odd) | (cb & odd);
    const std::uint64_t cv = (cb & ~odd) | (sb & odd);
    s[i] = std::bit_cast<double>(sv ^ ((q & 2u) << 62));
    c[i] = std::bit_cast<double>(cv ^ (((q + 1u) & 2u) << 62));
  }
  if (outside > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(std::abs(x[i]) < kLimit)) {
        s[i] = std::sin(x[i]);
        c[i] = std::cos(x[i]);
      }
    }
  }
}

DenseArray map(const DenseArray& a, UnaryOp op, double leaky_slope) {
  DenseArray out(a.shape());
  const std::size_t n = a.size();
  switch (op) {
    case UnaryOp::kSin:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::sin(a[i]);
      break;
    case UnaryOp::kCos:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::cos(a[i]);
      break;
    case UnaryOp::kExp:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a[i]);
      break;
    case UnaryOp::kLog:
      for (std::size_t i = 0; i < n; ++i) {
        if (!(a[i] > 0.0)) {
          throw DomainError("log of non-positive value " + std::to_string(a[i]) + " at index " +
                            std::to_string(i));
        }
        out[i] = std::log(a[i]);
      }
      break;
    case UnaryOp::kLeakyRelu:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : leaky_slope * a[i];
      break;
  }
  return out;
}

DenseArray operator+(const DenseArray& a, const DenseArray& b) {
  return elementwise(a, b, BinaryOp::kAdd);
}
DenseArray operator-(const DenseArray& a, const DenseArray& b) {
  return elementwise(a, b, BinaryOp::kSub);
}
DenseArray operator*(const DenseArray& a, const DenseArray& b) {
  return elementwise(a, b, BinaryOp::kMul);
}
DenseArray operator/(const DenseArray& a, const DenseArray& b) {
  return elementwise(a, b, BinaryOp::kDiv);
}

DenseArray add_row_vector(const DenseArray& a, const DenseArray& bias) {
  require_rank2(a, "add_row_vector");
  if (bias.rank() != 1 || bias.size() != a.cols()) throw_pair("add_row_vector", a, bias);
  DenseArray out = a;
  const std::size_t cols = a.cols();
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bias[c];
  return out;
}

void axpy_inplace(DenseArray& y, double alpha, const DenseArray& x) {
  if (y.shape() != x.shape()) throw_pair("axpy", y, x);
  double* yd = y.data();
  const double* xd = x.data();
  for (std::size_t i = 0; i < y.size(); ++i) yd[i] += alpha * xd[i];
}

void scale_inplace(DenseArray& y, double alpha) {
  for (double& v : y.values()) v *= alpha;
}

bool all_finite(const DenseArray& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double v) { return std::isfinite(v); });
}

double max_abs_diff(const DenseArray& a, const DenseArray& b) {
  if (a.shape() != b.shape()) throw_pair("max_abs_diff", a, b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace inrseg
