#include "inrseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "inrseg/errors.hpp"

namespace inrseg {

DiceReport dice(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt,
                std::size_t num_classes) {
  if (pred.size() != gt.size()) {
    throw DimensionError("dice: prediction has " + std::to_string(pred.size()) +
                         " pixels, ground truth " + std::to_string(gt.size()));
  }
  std::vector<std::size_t> p_count(num_classes, 0), g_count(num_classes, 0), both(num_classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] >= num_classes || gt[i] >= num_classes)
      throw InputError("dice: class value out of range at pixel " + std::to_string(i));
    ++p_count[pred[i]];
    ++g_count[gt[i]];
    if (pred[i] == gt[i]) ++both[pred[i]];
  }
  DiceReport r;
  r.per_class.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const std::size_t denom = p_count[c] + g_count[c];
    r.per_class[c] = denom == 0 ? 1.0
                                : 2.0 * static_cast<double>(both[c]) / static_cast<double>(denom);
  }
  double fg = 0.0, all = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    all += r.per_class[c];
    if (c > 0) fg += r.per_class[c];
  }
  r.all_mean = all / static_cast<double>(num_classes);
  r.foreground_mean = num_classes > 1 ? fg / static_cast<double>(num_classes - 1) : r.all_mean;
  return r;
}

double psnr(const DenseArray& reference, const DenseArray& estimate) {
  if (reference.shape() != estimate.shape()) {
    throw DimensionError("psnr: shape mismatch " + shape_to_string(reference.shape()) + " vs " +
                         shape_to_string(estimate.shape()));
  }
  if (reference.size() == 0) return kPsnrCapDb;
  double se = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - estimate[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(reference.size());
  if (mse <= 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, -10.0 * std::log10(mse));
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

}  // namespace inrseg
