#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "inrseg/dataset.hpp"
#include "inrseg/meta_learning.hpp"
#include "inrseg/siren.hpp"

namespace inrseg {

/// Penultimate features of per-scan fits with the matching labels, pooled
/// across subjects. Subject j owns rows [row_offsets[j], row_offsets[j + 1]).
struct FeatureDataset {
  std::vector<std::string> subject_ids;
  std::vector<std::size_t> row_offsets{0};
  DenseArray features;               // rows x h
  std::vector<std::uint8_t> labels;  // rows
  std::vector<double> fit_psnr;      // per subject, after fitting
  std::size_t num_classes = 0;
  std::size_t fit_steps = 0;

  std::size_t rows() const { return labels.size(); }
  std::size_t subjects() const { return subject_ids.size(); }
};

// Initialization used for scan j; lets callers give every scan its own start.
using InitForScan = std::function<SirenModel(std::size_t scan)>;

/// Fits a fresh copy of the initialization to every training scan, recon-only,
/// for `fit_steps` steps and harvests f^{L-1} at every grid coordinate.
/// Scans may be fitted concurrently. Divergence is rethrown naming the subject.
FeatureDataset build_feature_dataset(const SirenModel& init, const std::vector<Sample>& train,
                                     std::size_t fit_steps, double lr);
FeatureDataset build_feature_dataset(const InitForScan& init, const std::vector<Sample>& train,
                                     std::size_t fit_steps, double lr);

struct HeadTrainConfig {
  double lr = 1e-4;
  double gamma = 1.0;
  std::size_t max_epochs = 100;
  std::size_t batch_rows = 4096;
  double plateau_tol = 1e-4;       // relative improvement ...
  std::size_t plateau_window = 3;  // ... over this many epochs
  std::uint64_t seed = 0;
};

// Head learning rate for a class count: 5e-5 for five classes, `base` otherwise.
double head_learning_rate(std::size_t num_classes, double base = 1e-4);

struct HeadTrainResult {
  SegHeadParams head;
  std::vector<double> epoch_loss;  // mean minibatch focal loss per epoch
};

/// Minibatch Adam on the mean focal loss over all pooled rows; rows are
/// reshuffled every epoch (stream `epoch` of the seed). Stops at max_epochs or
/// once the loss improved by less than plateau_tol (relative) over the last
/// plateau_window epochs. Throws InputError for an empty dataset.
HeadTrainResult train_seg_head(const FeatureDataset& data, const SegHeadParams& init,
                               double leaky_slope, const HeadTrainConfig& config);

struct Segmentation {
  Shape extents;
  std::vector<std::uint8_t> labels;  // row-major over extents
  DenseArray probs;                  // pixels x C
  DenseArray recon;                  // pixels x D
  double psnr = 0.0;
  std::vector<double> fit_curve;     // recon loss per fit step
  SirenModel fitted;
};

/// Fits a copy of the model's INR to `image` (shape extents or (extents..., D))
/// for `fit_steps` recon-only steps, then decodes labels through the frozen head
/// as argmax of the softmax, ties to the smallest class.
Segmentation infer_segment(const SirenModel& model, const DenseArray& image, std::size_t fit_steps,
                           double lr, const FitObserver& observer = {});

// Labels of an already fitted model at the given coordinates, evaluated in chunks.
std::vector<std::uint8_t> decode_labels(const SirenModel& fitted, const DenseArray& coords,
                                        DenseArray* probs = nullptr, DenseArray* recon = nullptr);

/// Evaluates the continuous fit on a grid of `target_extents`.
/// Throws InputError if the axis count differs from the model's input dimension.
std::vector<std::uint8_t> segment_at_resolution(const SirenModel& fitted,
                                                const Shape& target_extents);

}  // namespace inrseg
