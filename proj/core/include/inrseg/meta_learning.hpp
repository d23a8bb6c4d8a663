#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "inrseg/adam.hpp"
#include "inrseg/checkpoint.hpp"
#include "inrseg/dataset.hpp"
#include "inrseg/siren.hpp"

namespace inrseg {

enum class InnerLoss { kReconOnly, kReconPlusCls };
enum class OuterMode { kAdam, kSgd };

struct MetaConfig {
  std::size_t inner_steps = 2;       // T_i
  std::size_t epochs = 10;           // outer epochs over the training set
  std::size_t fit_steps = 100;       // T_f
  double lr_inner = 1e-4;
  double lr_outer = 1e-4;            // β
  double gamma = 1.0;
  double recon_bg_scale = 1.0;
  std::size_t val_every = 50;        // 0 disables validation
  std::size_t val_fit_steps = 100;
  std::size_t meta_batch = 1;
  std::size_t checkpoint_every = 0;  // extra state snapshots; the final step always snapshots
  OuterMode outer_mode = OuterMode::kAdam;
  InnerLoss inner_loss = InnerLoss::kReconPlusCls;
  std::uint64_t seed = 0;

  void validate() const;  // throws InputError
};

using FitObserver = std::function<void(std::size_t step, const SirenModel& model)>;

struct FitResult {
  SirenModel model;
  std::vector<double> loss_history;  // entry k: loss at the parameters before update k+1
};

/// T_i full-batch Adam steps on one subject from a copy of `init` with a fresh
/// optimizer state. kReconOnly updates θ only, so the head is returned bitwise
/// unchanged. Background pixels are weighted by `recon_bg_scale`.
/// Throws DivergenceError carrying the step index on a non-finite loss.
FitResult inner_fit(const SirenModel& init, const Sample& sample, std::size_t steps, double lr,
                    double gamma, double recon_bg_scale, InnerLoss mode);

/// Recon-only fit with unit pixel weights, the test-time protocol (no labels).
/// `observer` runs after every update with the 1-based step count.
FitResult fit_reconstruction(const SirenModel& init, const DenseArray& coords,
                             const DenseArray& targets, std::size_t steps, double lr,
                             const FitObserver& observer = {});

struct MetaState {
  SirenModel model;        // θ^t, φ^t
  AdamState outer;
  std::uint64_t step = 0;
  SirenModel best_model;   // meaningful when has_best
  double best_score = -std::numeric_limits<double>::infinity();
  std::uint64_t best_step = 0;
  bool has_best = false;

  // best_model if a validation has run, the current parameters otherwise.
  const SirenModel& best_or_current() const { return has_best ? best_model : model; }
};

MetaState make_meta_state(const SirenModel& init);

/// Outer step with meta-gradient g = θ^t - mean_j θ'_j (moving toward the adapted
/// parameters). Adam mode feeds g to the outer Adam state at rate `beta`; SGD mode
/// applies θ^t - β g, i.e. (1 - β) θ^t + β mean_j θ'_j. Increments the step counter.
/// Throws DimensionError if an adapted model does not match the meta-parameters.
void outer_update(MetaState& meta, std::span<const SirenModel> adapted, double beta,
                  OuterMode mode);
void outer_update(MetaState& meta, const SirenModel& adapted, double beta, OuterMode mode);

struct ValidationResult {
  double mean_dice = 0.0;  // foreground-mean Dice averaged over scans
  double mean_psnr = 0.0;
  std::vector<double> dice;
  std::vector<double> psnr;
};

/// Fits a copy of the parameters to each scan (recon-only, `fit_steps`), decodes
/// labels through the head and scores them. Scans may run concurrently.
ValidationResult validate(const SirenModel& model, const std::vector<Sample>& val,
                          std::size_t fit_steps, double lr);

struct MetaLogRow {
  std::uint64_t outer_step = 0;
  double inner_loss_first = 0.0;
  double inner_loss_last = 0.0;
  std::optional<double> val_dice;
  std::optional<double> val_psnr;
};

struct MetaTrainHooks {
  std::function<void(const MetaLogRow&)> on_step;
  // Runs at every snapshot boundary with the (already rounded) state.
  std::function<void(const MetaState&)> on_checkpoint;
};

std::size_t steps_per_epoch(std::size_t train_count, std::size_t meta_batch);

/// Outer loop over `epochs` shuffled passes of the training set, `meta_batch`
/// subjects per step. Epoch e uses the permutation from Rng::for_stream(seed, e).
/// Validation every `val_every` steps keeps the best parameters by mean Dice.
/// At snapshot boundaries the state is rounded to checkpoint precision, so
/// continuing from a written checkpoint reproduces an uninterrupted run bitwise.
/// `resume` continues a state produced with the same config and data.
/// Throws InputError for an empty training set.
MetaState meta_train(const std::vector<Sample>& train, const std::vector<Sample>& val,
                     const SirenModel& init, const MetaConfig& config,
                     const MetaTrainHooks& hooks = {}, const MetaState* resume = nullptr);

// Rounds every stored value to 32-bit float precision.
void round_to_checkpoint_precision(MetaState& state);

/// Checkpoint carrying the full resumable state: the model, the outer moments
/// and the best snapshot as extra arrays.
CheckpointData to_checkpoint(const MetaState& state);
// Inverse of to_checkpoint; a plain model checkpoint yields a fresh state.
MetaState from_checkpoint(const CheckpointData& data, const AdamHyper& outer_hyper);

}  // namespace inrseg
