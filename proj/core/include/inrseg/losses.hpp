#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "inrseg/siren.hpp"
#include "inrseg/tensor.hpp"

namespace inrseg {

// Probabilities below this are clamped before taking the log.
inline constexpr double kProbabilityFloor = 1e-12;
// Rows per chunk when evaluating an objective over a full coordinate grid.
inline constexpr std::size_t kDefaultChunkRows = 4096;

// Row-wise softmax with max subtraction.
DenseArray softmax(const DenseArray& logits);
// Row-wise argmax; ties resolve to the smallest class index.
std::vector<std::uint8_t> argmax_rows(const DenseArray& scores);
DenseArray one_hot(std::span<const std::uint8_t> labels, std::size_t num_classes);

/// Mean over pixels of w(x) * ||I(x) - Î(x)||². Empty weights mean w = 1.
double loss_recon(const DenseArray& target, const DenseArray& recon,
                  std::span<const double> pixel_weights = {});

/// Mean over pixels of the true-class focal term -(1 - p)^γ log p.
/// Throws InputError if a row of `onehot` is not one-hot.
double loss_focal(const DenseArray& onehot, const DenseArray& probs, double gamma);

// loss_recon + loss_focal, unit weighting.
double loss_inner(const DenseArray& target, const DenseArray& onehot, const DenseArray& recon,
                  const DenseArray& probs, double gamma, std::span<const double> pixel_weights = {});

enum class LossKind { kRecon, kFocal, kInner };

// Non-owning views of the supervision for one coordinate batch.
struct LossTargets {
  const DenseArray* image = nullptr;         // n x D; required by kRecon and kInner
  const DenseArray* onehot = nullptr;        // n x C; required by kFocal and kInner
  std::span<const double> pixel_weights{};   // n entries or empty
};

struct LossSpec {
  LossKind kind = LossKind::kInner;
  LossTargets targets;
  double gamma = 0.0;

  bool uses_recon() const { return kind != LossKind::kFocal; }
  bool uses_cls() const { return kind != LossKind::kRecon; }
};

struct LossValue {
  double recon = 0.0;
  double cls = 0.0;
  double total() const { return recon + cls; }
};

struct LossGradients {
  LossValue value;
  DenseArray d_recon;                 // n x D
  std::optional<DenseArray> d_logits;  // n x C when the spec has a classification term
};

/// Loss value and its gradient w.r.t. the network outputs for rows
/// [row_offset, row_offset + n) of a batch with `total_rows` rows in total
/// (the mean normalizer). total_rows == 0 means the result covers the whole batch.
LossGradients loss_gradients(const ForwardResult& result, const LossSpec& spec,
                             std::size_t row_offset = 0, std::size_t total_rows = 0);

/// Mean focal loss of `logits` against integer labels; when `d_logits` is given it
/// receives the gradient with respect to the logits (same mean normalization).
double focal_from_logits(const DenseArray& logits, std::span<const std::uint8_t> labels,
                         double gamma, DenseArray* d_logits = nullptr);

// Analytic gradients of `spec` for the batch that produced `result`.
SirenGradients backward(const SirenModel& model, const ForwardResult& result,
                        const LossSpec& spec);

struct ObjectiveResult {
  LossValue loss;
  SirenGradients grads;
};

/// Loss and parameter gradients over all rows of `coords`, evaluated in
/// fixed-size row chunks. Chunks may run on several threads; partial sums are
/// always combined in chunk order, so the result does not depend on the
/// thread count.
ObjectiveResult evaluate_objective(const SirenModel& model, const DenseArray& coords,
                                   const LossSpec& spec,
                                   std::size_t chunk_rows = kDefaultChunkRows);

// Loss value only (no backward pass), same chunking and reduction order.
LossValue evaluate_loss(const SirenModel& model, const DenseArray& coords, const LossSpec& spec,
                        std::size_t chunk_rows = kDefaultChunkRows);

}  // namespace inrseg
