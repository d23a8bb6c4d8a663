#include "inrseg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "inrseg/errors.hpp"
#include "inrseg/parallel.hpp"

namespace inrseg {
namespace {

void require_same_shape(const DenseArray& a, const DenseArray& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
}

std::size_t true_class(const DenseArray& onehot, std::size_t row) {
  const std::size_t c = onehot.cols();
  std::size_t hot = c;
  for (std::size_t k = 0; k < c; ++k) {
    const double v = onehot(row, k);
    if (v == 1.0 && hot == c) {
      hot = k;
    } else if (v != 0.0) {
      hot = c + 1;
      break;
    }
  }
  if (hot >= c) throw InputError("label row " + std::to_string(row) + " is not one-hot");
  return hot;
}

double focal_term(double p, double gamma) {
  const double pc = std::max(p, kProbabilityFloor);
  return -std::pow(1.0 - pc, gamma) * std::log(pc);
}

// d(focal_term)/dp * p, so that dL/dz_c = g * (δ_ct - p_c).
double focal_scaled_slope(double p, double gamma) {
  if (p < kProbabilityFloor) return 0.0;
  const double q = 1.0 - p;
  double g = -std::pow(q, gamma);
  if (gamma != 0.0 && q > 0.0) g += gamma * std::pow(q, gamma - 1.0) * p * std::log(p);
  return g;
}

void check_weights(std::span<const double> w, std::size_t n) {
  if (!w.empty() && w.size() != n) {
    throw DimensionError("pixel weights: expected " + std::to_string(n) + " entries, got " +
                         std::to_string(w.size()));
  }
}

void accumulate(SirenGradients& into, const SirenGradients& g) {
  auto dst = grad_tensors(into);
  auto src = grad_tensors(g);
  for (std::size_t i = 0; i < dst.size(); ++i)
    axpy_inplace(*dst[i], 1.0, *src[i]);
}

LossTargets slice_targets(const LossTargets& t, std::size_t begin, std::size_t end,
                          DenseArray& image_buf, DenseArray& onehot_buf) {
  LossTargets out;
  if (t.image) {
    image_buf = slice_rows(*t.image, begin, end);
    out.image = &image_buf;
  }
  if (t.onehot) {
    onehot_buf = slice_rows(*t.onehot, begin, end);
    out.onehot = &onehot_buf;
  }
  if (!t.pixel_weights.empty()) out.pixel_weights = t.pixel_weights.subspan(begin, end - begin);
  return out;
}

void check_spec(const LossSpec& spec, std::size_t n) {
  if (spec.uses_recon() && !spec.targets.image)
    throw InputError("loss spec needs a target image");
  if (spec.uses_cls() && !spec.targets.onehot) throw InputError("loss spec needs one-hot labels");
  if (spec.targets.image && spec.targets.image->rows() != n)
    throw DimensionError("loss spec: image rows do not match the coordinate batch");
  if (spec.targets.onehot && spec.targets.onehot->rows() != n)
    throw DimensionError("loss spec: label rows do not match the coordinate batch");
  check_weights(spec.targets.pixel_weights, n);
  if (spec.gamma < 0.0) throw InputError("focal gamma must be non-negative");
}

template <typename ChunkFn, typename Combine>
void for_each_chunk(std::size_t n, std::size_t chunk_rows, ChunkFn&& fn, Combine&& combine) {
  if (chunk_rows == 0) chunk_rows = n ? n : 1;
  const std::size_t chunks = (n + chunk_rows - 1) / chunk_rows;
  using Result = decltype(fn(std::size_t{}, std::size_t{}));
  std::vector<Result> parts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = c * chunk_rows;
    parts[c] = fn(begin, std::min(n, begin + chunk_rows));
  });
  for (auto& p : parts) combine(p);
}

}  // namespace

DenseArray softmax(const DenseArray& logits) {
  if (logits.rank() != 2) throw DimensionError("softmax: expected n x C logits");
  DenseArray p(logits.shape());
  const std::size_t c = logits.cols();
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const double* z = logits.data() + r * c;
    double* out = p.data() + r * c;
    const double m = *std::max_element(z, z + c);
    double s = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      out[k] = std::exp(z[k] - m);
      s += out[k];
    }
    for (std::size_t k = 0; k < c; ++k) out[k] /= s;
  }
  return p;
}

std::vector<std::uint8_t> argmax_rows(const DenseArray& scores) {
  if (scores.rank() != 2) throw DimensionError("argmax_rows: expected rank-2 scores");
  const std::size_t c = scores.cols();
  std::vector<std::uint8_t> out(scores.rows());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    const double* z = scores.data() + r * c;
    std::size_t best = 0;
    for (std::size_t k = 1; k < c; ++k)
      if (z[k] > z[best]) best = k;
    out[r] = static_cast<std::uint8_t>(best);
  }
  return out;
}

DenseArray one_hot(std::span<const std::uint8_t> labels, std::size_t num_classes) {
  DenseArray out(Shape{labels.size(), num_classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      throw InputError("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                       " exceeds class count " + std::to_string(num_classes));
    }
    out(i, labels[i]) = 1.0;
  }
  return out;
}

double loss_recon(const DenseArray& target, const DenseArray& recon,
                  std::span<const double> pixel_weights) {
  require_same_shape(target, recon, "loss_recon");
  const std::size_t n = target.rank() == 0 ? 1 : target.extent(0);
  if (n == 0) return 0.0;
  const std::size_t channels = target.size() / n;
  check_weights(pixel_weights, n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = 0.0;
    for (std::size_t k = 0; k < channels; ++k) {
      const double d = target[i * channels + k] - recon[i * channels + k];
      e += d * d;
    }
    total += pixel_weights.empty() ? e : pixel_weights[i] * e;
  }
  return total / static_cast<double>(n);
}

double loss_focal(const DenseArray& onehot, const DenseArray& probs, double gamma) {
  require_same_shape(onehot, probs, "loss_focal");
  if (onehot.rank() != 2) throw DimensionError("loss_focal: expected n x C arrays");
  if (gamma < 0.0) throw InputError("loss_focal: gamma must be non-negative");
  const std::size_t n = onehot.rows();
  if (n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += focal_term(probs(i, true_class(onehot, i)), gamma);
  return total / static_cast<double>(n);
}

double loss_inner(const DenseArray& target, const DenseArray& onehot, const DenseArray& recon,
                  const DenseArray& probs, double gamma, std::span<const double> pixel_weights) {
  return loss_recon(target, recon, pixel_weights) + loss_focal(onehot, probs, gamma);
}

LossGradients loss_gradients(const ForwardResult& result, const LossSpec& spec,
                             std::size_t row_offset, std::size_t total_rows) {
  const std::size_t n = result.recon.rows();
  check_spec(spec, n);
  if (total_rows == 0) total_rows = n;
  if (row_offset + n > total_rows) throw DimensionError("loss_gradients: row range out of bounds");
  const double inv_n = 1.0 / static_cast<double>(total_rows);

  LossGradients out;
  out.d_recon = DenseArray(result.recon.shape());
  if (spec.uses_recon()) {
    const DenseArray& target = *spec.targets.image;
    require_same_shape(target, result.recon, "loss_gradients");
    const std::size_t channels = target.cols();
    const auto w = spec.targets.pixel_weights;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = w.empty() ? 1.0 : w[i];
      for (std::size_t k = 0; k < channels; ++k) {
        const std::size_t idx = i * channels + k;
        const double d = result.recon[idx] - target[idx];
        total += wi * d * d;
        out.d_recon[idx] = 2.0 * wi * d * inv_n;
      }
    }
    out.value.recon = total * inv_n;
  }
  if (spec.uses_cls()) {
    if (!result.trace.has_head) throw InputError("loss_gradients: forward pass skipped the head");
    const DenseArray& onehot = *spec.targets.onehot;
    require_same_shape(onehot, result.logits, "loss_gradients");
    DenseArray probs = softmax(result.logits);
    DenseArray d_logits(probs.shape());
    const std::size_t c = probs.cols();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = true_class(onehot, i);
      const double pt = probs(i, t);
      total += focal_term(pt, spec.gamma);
      const double g = focal_scaled_slope(pt, spec.gamma) * inv_n;
      for (std::size_t k = 0; k < c; ++k)
        d_logits(i, k) = g * ((k == t ? 1.0 : 0.0) - probs(i, k));
    }
    out.value.cls = total * inv_n;
    out.d_logits = std::move(d_logits);
  }
  return out;
}

double focal_from_logits(const DenseArray& logits, std::span<const std::uint8_t> labels,
                         double gamma, DenseArray* d_logits) {
  if (logits.rank() != 2 || logits.rows() != labels.size())
    throw DimensionError("focal_from_logits: " + shape_to_string(logits.shape()) + " logits for " +
                         std::to_string(labels.size()) + " labels");
  const std::size_t n = logits.rows(), c = logits.cols();
  if (n == 0) {
    if (d_logits) *d_logits = DenseArray(logits.shape());
    return 0.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const DenseArray probs = softmax(logits);
  if (d_logits) *d_logits = DenseArray(logits.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t t = labels[i];
    if (t >= c) throw InputError("focal_from_logits: label out of range at row " + std::to_string(i));
    const double pt = probs(i, t);
    total += focal_term(pt, gamma);
    if (d_logits) {
      const double g = focal_scaled_slope(pt, gamma) * inv_n;
      for (std::size_t k = 0; k < c; ++k) (*d_logits)(i, k) = g * ((k == t ? 1.0 : 0.0) - probs(i, k));
    }
  }
  return total * inv_n;
}

SirenGradients backward(const SirenModel& model, const ForwardResult& result,
                        const LossSpec& spec) {
  LossGradients lg = loss_gradients(result, spec);
  return backward(model, result.trace, lg.d_recon, lg.d_logits ? &*lg.d_logits : nullptr);
}

ObjectiveResult evaluate_objective(const SirenModel& model, const DenseArray& coords,
                                   const LossSpec& spec, std::size_t chunk_rows) {
  const std::size_t n = coords.rows();
  check_spec(spec, n);
  ObjectiveResult out{{}, zero_gradients(model)};
  for_each_chunk(
      n, chunk_rows,
      [&](std::size_t begin, std::size_t end) {
        DenseArray image_buf, onehot_buf;
        LossSpec part = spec;
        part.targets = slice_targets(spec.targets, begin, end, image_buf, onehot_buf);
        ForwardResult fr = forward(model, slice_rows(coords, begin, end), spec.uses_cls());
        LossGradients lg = loss_gradients(fr, part, begin, n);
        return ObjectiveResult{
            lg.value,
            backward(model, fr.trace, lg.d_recon, lg.d_logits ? &*lg.d_logits : nullptr)};
      },
      [&](const ObjectiveResult& part) {
        out.loss.recon += part.loss.recon;
        out.loss.cls += part.loss.cls;
        accumulate(out.grads, part.grads);
      });
  return out;
}

LossValue evaluate_loss(const SirenModel& model, const DenseArray& coords, const LossSpec& spec,
                        std::size_t chunk_rows) {
  const std::size_t n = coords.rows();
  check_spec(spec, n);
  LossValue out;
  for_each_chunk(
      n, chunk_rows,
      [&](std::size_t begin, std::size_t end) {
        DenseArray image_buf, onehot_buf;
        LossSpec part = spec;
        part.targets = slice_targets(spec.targets, begin, end, image_buf, onehot_buf);
        ForwardResult fr = forward(model, slice_rows(coords, begin, end), spec.uses_cls());
        return loss_gradients(fr, part, begin, n).value;
      },
      [&](const LossValue& part) {
        out.recon += part.recon;
        out.cls += part.cls;
      });
  return out;
}

}  // namespace inrseg
