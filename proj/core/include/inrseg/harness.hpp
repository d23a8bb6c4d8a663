#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "inrseg/dataset.hpp"
#include "inrseg/meta_learning.hpp"
#include "inrseg/metrics.hpp"
#include "inrseg/seg_pipeline.hpp"
#include "inrseg/siren.hpp"

namespace inrseg {

enum class InitStrategy { kRandom, kFixed, kMetaImageOnly, kMetaSeg };

const char* strategy_name(InitStrategy s);
InitStrategy parse_strategy(const std::string& name);  // throws ConfigError

struct PipelineConfig {
  SirenConfig model;
  MetaConfig meta;
  HeadTrainConfig head;
  std::uint64_t seed = 0;
};

/// A trained initialization plus head. For kRandom every scan starts from its own
/// fresh INR draw; the other strategies share `model`'s INR.
struct TrainedPipeline {
  InitStrategy strategy = InitStrategy::kMetaSeg;
  SirenModel model;  // θ* and the refined φ*
  std::uint64_t seed = 0;
  std::vector<MetaLogRow> meta_log;
  std::vector<double> head_loss;

  // Starting parameters for a scan; `key` distinguishes scans under kRandom.
  SirenModel init_for(std::uint64_t key) const;
};

// Scan keys for test-time inits, disjoint from the training-scan keys.
inline constexpr std::uint64_t kTestScanKeyBase = 1u << 20;

/// Builds the initialization for `strategy`, harvests features from `train`,
/// and refines the head on them.
///   random          fresh INR per scan, head trained on their features
///   fixed           one shared random INR
///   meta_image_only meta-training with recon-only inner fits (no validation;
///                   the untrained head cannot rank snapshots), final parameters
///   metaseg         full meta-training, best validation snapshot
TrainedPipeline train_pipeline(const std::vector<Sample>& train, const std::vector<Sample>& val,
                               const PipelineConfig& config, InitStrategy strategy);

struct SweepPoint {
  std::size_t step = 0;
  double psnr = 0.0;
  double dice = 0.0;  // foreground mean
};

/// One continuous recon-only fit of `init` to the sample's image; labels are
/// scored at every checkpoint (sorted, duplicates removed, 0 allowed). The mask
/// is only used for scoring.
std::vector<SweepPoint> overfit_sweep(const SirenModel& init, const Sample& sample,
                                      std::vector<std::size_t> checkpoints, double lr);

struct TestEvaluation {
  std::vector<std::size_t> checkpoints;
  std::vector<std::string> subject_ids;
  std::vector<std::vector<SweepPoint>> per_subject;

  Summary dice_at(std::size_t checkpoint) const;
  Summary psnr_at(std::size_t checkpoint) const;
};

// overfit_sweep for every test scan (scan i starts from init_for(kTestScanKeyBase + i)).
TestEvaluation evaluate_test(const TrainedPipeline& pipeline, const std::vector<Sample>& test,
                             std::vector<std::size_t> checkpoints, double lr);

struct AblationRow {
  InitStrategy strategy = InitStrategy::kRandom;
  std::vector<double> dice;  // per test subject at fit_steps
  Summary summary;
};

// Trains and evaluates each strategy on the same splits; rows follow `strategies`.
std::vector<AblationRow> ablation_run(const std::vector<Sample>& train,
                                      const std::vector<Sample>& val,
                                      const std::vector<Sample>& test, const PipelineConfig& config,
                                      const std::vector<InitStrategy>& strategies);

struct SensitivityConfig {
  std::array<double, 2> rotation_deg{5.0, 15.0};     // magnitude range, random sign
  std::array<double, 2> translation_px{5.0, 10.0};   // magnitude range, random direction
  std::size_t trials = 1;                            // perturbations per scan and type
  std::size_t fit_steps = 100;
  double lr = 1e-4;
  std::uint64_t seed = 0;
};

struct SensitivityRow {
  std::string perturbation;  // "rotation" or "translation"
  double clean_dice = 0.0;
  double perturbed_dice = 0.0;
  double drop = 0.0;           // clean - perturbed
  double relative_drop = 0.0;  // drop / clean
  std::size_t evaluations = 0;
};

/// Mean Dice of each test scan as given versus rigidly perturbed copies, each
/// fitted from scratch. Perturbations for scan i come from stream i of the seed.
/// Throws InputError for non-2D samples.
std::vector<SensitivityRow> sensitivity_eval(const TrainedPipeline& pipeline,
                                             const std::vector<Sample>& test,
                                             const SensitivityConfig& config);

/// Nearest-neighbour resampling of a label map between grids spanning [-1, 1]:
/// each target pixel takes the source pixel whose coordinate is closest.
std::vector<std::uint8_t> resample_nearest(const std::vector<std::uint8_t>& labels,
                                           const Shape& from, const Shape& to);

/// Fraction of pixels where the `factor`x label map of a fitted model, resampled
/// back to the fit grid, agrees with the labels on the fit grid itself.
double super_resolution_agreement(const SirenModel& fitted, const Shape& extents,
                                  std::size_t factor);

}  // namespace inrseg
