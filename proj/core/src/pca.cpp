#include "inrseg/pca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "inrseg/errors.hpp"
#include "inrseg/rng.hpp"

namespace inrseg {
namespace {

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> mat_vec(const DenseArray& a, const std::vector<double>& v) {
  const std::size_t h = a.rows();
  std::vector<double> out(h, 0.0);
  for (std::size_t i = 0; i < h; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < h; ++j) s += a(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

}  // namespace

DenseArray covariance(const DenseArray& features, DenseArray* mean_out) {
  if (features.rank() != 2 || features.rows() < 2)
    throw InputError("covariance: need at least two feature rows");
  DenseArray mean = reduce_mean(features, 0);
  DenseArray centered = features;
  const std::size_t h = features.cols();
  for (std::size_t r = 0; r < features.rows(); ++r)
    for (std::size_t c = 0; c < h; ++c) centered(r, c) -= mean[c];
  DenseArray cov = matmul_tn(centered, centered);
  scale_inplace(cov, 1.0 / static_cast<double>(features.rows() - 1));
  if (mean_out) *mean_out = std::move(mean);
  return cov;
}

PcaResult pca_features(const DenseArray& features, std::size_t k, const Shape& map_extents,
                       const PcaOptions& options) {
  if (features.rank() != 2) throw InputError("pca_features: features must be n x h");
  const std::size_t n = features.rows(), h = features.cols();
  if (k < 1 || n <= k) throw InputError("pca_features: need n > k >= 1");
  if (k >= h)
    throw InputError("pca_features: k = " + std::to_string(k) + " must be below feature width " +
                     std::to_string(h));
  if (!map_extents.empty() && shape_product(map_extents) != n)
    throw InputError("pca_features: map extents do not cover the feature rows");

  PcaResult r;
  r.k = k;
  DenseArray cov = covariance(features, &r.mean);
  double trace = 0.0;
  for (std::size_t i = 0; i < h; ++i) trace += cov(i, i);

  Rng rng(options.seed);
  r.components = DenseArray(Shape{k, h});
  for (std::size_t comp = 0; comp < k; ++comp) {
    std::vector<double> v(h);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    double lambda = 0.0;
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
      // deflate: project out the components already found
      for (std::size_t p = 0; p < comp; ++p) {
        double dot = 0.0;
        for (std::size_t j = 0; j < h; ++j) dot += v[j] * r.components(p, j);
        for (std::size_t j = 0; j < h; ++j) v[j] -= dot * r.components(p, j);
      }
      const double nv = norm(v);
      if (nv == 0.0) break;
      for (double& x : v) x /= nv;
      std::vector<double> w = mat_vec(cov, v);
      double next = 0.0;
      for (std::size_t j = 0; j < h; ++j) next += v[j] * w[j];
      const double nw = norm(w);
      if (nw == 0.0) {
        lambda = 0.0;
        break;
      }
      double change = 0.0;
      for (std::size_t j = 0; j < h; ++j) change = std::max(change, std::abs(w[j] / nw - v[j]));
      const bool settled = std::abs(next - lambda) <= options.eigenvalue_tol * std::max(1.0, std::abs(next)) &&
                           change <= options.vector_tol;
      lambda = next;
      v = std::move(w);
      for (double& x : v) x /= nw;
      if (settled) break;
    }
    // re-orthogonalize the final vector before storing it
    for (std::size_t p = 0; p < comp; ++p) {
      double dot = 0.0;
      for (std::size_t j = 0; j < h; ++j) dot += v[j] * r.components(p, j);
      for (std::size_t j = 0; j < h; ++j) v[j] -= dot * r.components(p, j);
    }
    const double nv = norm(v);
    if (nv > 0.0)
      for (double& x : v) x /= nv;
    std::size_t big = 0;
    for (std::size_t j = 1; j < h; ++j)
      if (std::abs(v[j]) > std::abs(v[big])) big = j;
    const double sign = v[big] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < h; ++j) r.components(comp, j) = sign * v[j];
    const std::vector<double> av = mat_vec(cov, v);
    double rq = 0.0;
    for (std::size_t j = 0; j < h; ++j) rq += v[j] * av[j];
    r.eigenvalues.push_back(std::max(0.0, rq));
  }
  for (double e : r.eigenvalues) r.explained_ratio.push_back(trace > 0.0 ? e / trace : 0.0);

  DenseArray centered = features;
  for (std::size_t row = 0; row < n; ++row)
    for (std::size_t c = 0; c < h; ++c) centered(row, c) -= r.mean[c];
  r.projections = matmul_nt(centered, r.components);

  const Shape extents = map_extents.empty() ? Shape{n} : map_extents;
  for (std::size_t comp = 0; comp < k; ++comp) {
    DenseArray map(extents);
    double lo = r.projections(0, comp), hi = lo;
    for (std::size_t row = 0; row < n; ++row) {
      lo = std::min(lo, r.projections(row, comp));
      hi = std::max(hi, r.projections(row, comp));
    }
    for (std::size_t row = 0; row < n; ++row)
      map[row] = hi > lo ? (r.projections(row, comp) - lo) / (hi - lo) : 0.0;
    r.maps.push_back(std::move(map));
  }
  return r;
}

}  // namespace inrseg
