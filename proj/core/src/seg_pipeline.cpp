#include "inrseg/seg_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "inrseg/adam.hpp"
#include "inrseg/errors.hpp"
#include "inrseg/grid.hpp"
#include "inrseg/losses.hpp"
#include "inrseg/metrics.hpp"
#include "inrseg/parallel.hpp"
#include "inrseg/rng.hpp"

namespace inrseg {
namespace {

struct ScanFeatures {
  DenseArray features;
  double psnr = 0.0;
};

Shape spatial_extents(const DenseArray& image, std::size_t dims) {
  if (image.rank() != dims && image.rank() != dims + 1) {
    throw InputError("infer_segment: image of shape " + shape_to_string(image.shape()) +
                     " does not match a " + std::to_string(dims) + "D model");
  }
  return Shape(image.shape().begin(), image.shape().begin() + static_cast<std::ptrdiff_t>(dims));
}

}  // namespace

FeatureDataset build_feature_dataset(const SirenModel& init, const std::vector<Sample>& train,
                                     std::size_t fit_steps, double lr) {
  return build_feature_dataset([&init](std::size_t) { return init; }, train, fit_steps, lr);
}

FeatureDataset build_feature_dataset(const InitForScan& init, const std::vector<Sample>& train,
                                     std::size_t fit_steps, double lr) {
  std::vector<ScanFeatures> scans(train.size());
  parallel_for(train.size(), [&](std::size_t j) {
    const Sample& s = train[j];
    const SirenModel start = init(j);
    const CoordGrid grid = make_grid(s.extents);
    const DenseArray targets = s.targets();
    FitResult fit;
    try {
      fit = fit_reconstruction(start, grid.coords, targets, fit_steps, lr);
    } catch (const DivergenceError& e) {
      throw DivergenceError("feature harvest for subject " + s.id + ": " + e.what(), e.step());
    }
    const ForwardResult out = forward(fit.model, grid.coords, false);
    scans[j].features = out.trace.penultimate();
    scans[j].psnr = psnr(targets, out.recon);
  });

  FeatureDataset fd;
  const std::size_t h = train.empty() ? 0 : scans[0].features.cols();
  std::size_t rows = 0;
  for (const Sample& s : train) rows += s.pixels();
  fd.features = DenseArray(Shape{rows, h});
  fd.labels.reserve(rows);
  fd.fit_steps = fit_steps;
  std::size_t at = 0;
  for (std::size_t j = 0; j < train.size(); ++j) {
    const Sample& s = train[j];
    if (fd.num_classes == 0) fd.num_classes = s.num_classes;
    const DenseArray& f = scans[j].features;
    std::copy(f.values().begin(), f.values().end(), fd.features.values().begin() +
                                                        static_cast<std::ptrdiff_t>(at * h));
    fd.labels.insert(fd.labels.end(), s.mask.begin(), s.mask.end());
    at += s.pixels();
    fd.subject_ids.push_back(s.id);
    fd.row_offsets.push_back(at);
    fd.fit_psnr.push_back(scans[j].psnr);
  }
  return fd;
}

double head_learning_rate(std::size_t num_classes, double base) {
  return num_classes == 5 ? 5e-5 : base;
}

HeadTrainResult train_seg_head(const FeatureDataset& data, const SegHeadParams& init,
                               double leaky_slope, const HeadTrainConfig& config) {
  if (data.rows() == 0) throw InputError("train_seg_head: empty feature dataset");
  if (config.batch_rows == 0) throw InputError("train_seg_head: batch_rows must be > 0");
  const std::size_t n = data.rows(), h = data.features.cols();

  HeadTrainResult r{init, {}};
  AdamState opt(AdamHyper{.lr = config.lr});
  std::vector<DenseArray*> params{&r.head.hidden.weight, &r.head.hidden.bias,
                                  &r.head.output.weight, &r.head.output.bias};

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const std::vector<std::size_t> order = Rng::for_stream(config.seed, epoch).permutation(n);
    double total = 0.0;
    for (std::size_t begin = 0; begin < n; begin += config.batch_rows) {
      const std::size_t end = std::min(n, begin + config.batch_rows);
      DenseArray batch(Shape{end - begin, h});
      std::vector<std::uint8_t> labels(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t src = order[i];
        std::copy_n(data.features.data() + src * h, h, batch.data() + (i - begin) * h);
        labels[i - begin] = data.labels[src];
      }
      DenseArray pre, act, d_logits;
      const DenseArray logits = head_forward(r.head, batch, leaky_slope, &pre, &act);
      const double loss = focal_from_logits(logits, labels, config.gamma, &d_logits);
      if (!std::isfinite(loss)) throw DivergenceError("non-finite loss in head training", epoch);
      total += loss * static_cast<double>(end - begin);
      SegHeadParams g = head_backward(r.head, batch, pre, act, d_logits, leaky_slope);
      std::vector<const DenseArray*> grads{&g.hidden.weight, &g.hidden.bias, &g.output.weight,
                                           &g.output.bias};
      adam_step(params, grads, opt);
    }
    r.epoch_loss.push_back(total / static_cast<double>(n));

    const std::size_t e = r.epoch_loss.size();
    if (e > config.plateau_window) {
      const double before = r.epoch_loss[e - 1 - config.plateau_window];
      const double now = r.epoch_loss[e - 1];
      if (before <= 0.0 || (before - now) / before < config.plateau_tol) break;
    }
  }
  return r;
}

std::vector<std::uint8_t> decode_labels(const SirenModel& fitted, const DenseArray& coords,
                                        DenseArray* probs, DenseArray* recon) {
  const std::size_t n = coords.rows();
  const std::size_t c = fitted.config.num_classes;
  std::vector<std::uint8_t> labels(n);
  if (probs) *probs = DenseArray(Shape{n, c});
  if (recon) *recon = DenseArray(Shape{n, fitted.config.output_dim});
  const std::size_t chunks = (n + kDefaultChunkRows - 1) / kDefaultChunkRows;
  parallel_for(chunks, [&](std::size_t k) {
    const std::size_t begin = k * kDefaultChunkRows;
    const std::size_t end = std::min(n, begin + kDefaultChunkRows);
    const ForwardResult out = forward(fitted, slice_rows(coords, begin, end), true);
    const std::vector<std::uint8_t> part = argmax_rows(out.logits);
    std::copy(part.begin(), part.end(), labels.begin() + static_cast<std::ptrdiff_t>(begin));
    if (probs) {
      const DenseArray p = softmax(out.logits);
      std::copy(p.values().begin(), p.values().end(),
                probs->values().begin() + static_cast<std::ptrdiff_t>(begin * c));
    }
    if (recon) {
      const std::size_t d = out.recon.cols();
      std::copy(out.recon.values().begin(), out.recon.values().end(),
                recon->values().begin() + static_cast<std::ptrdiff_t>(begin * d));
    }
  });
  return labels;
}

Segmentation infer_segment(const SirenModel& model, const DenseArray& image, std::size_t fit_steps,
                           double lr, const FitObserver& observer) {
  Segmentation s;
  s.extents = spatial_extents(image, model.config.input_dim);
  const std::size_t pixels = shape_product(s.extents);
  const std::size_t channels = pixels ? image.size() / pixels : 0;
  if (channels != model.config.output_dim) {
    throw InputError("infer_segment: image has " + std::to_string(channels) +
                     " channels, model reconstructs " + std::to_string(model.config.output_dim));
  }
  const CoordGrid grid = make_grid(s.extents);
  const DenseArray targets = image.reshaped(Shape{pixels, channels});
  FitResult fit = fit_reconstruction(model, grid.coords, targets, fit_steps, lr, observer);
  s.fit_curve = std::move(fit.loss_history);
  s.fitted = std::move(fit.model);
  s.labels = decode_labels(s.fitted, grid.coords, &s.probs, &s.recon);
  s.psnr = psnr(targets, s.recon);
  return s;
}

std::vector<std::uint8_t> segment_at_resolution(const SirenModel& fitted,
                                                const Shape& target_extents) {
  if (target_extents.size() != fitted.config.input_dim) {
    throw InputError("segment_at_resolution: target grid has " +
                     std::to_string(target_extents.size()) + " axes, model expects " +
                     std::to_string(fitted.config.input_dim));
  }
  return decode_labels(fitted, make_grid(target_extents).coords);
}

}  // namespace inrseg
