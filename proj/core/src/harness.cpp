#include "inrseg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "inrseg/augment.hpp"
#include "inrseg/errors.hpp"
#include "inrseg/grid.hpp"
#include "inrseg/parallel.hpp"
#include "inrseg/rng.hpp"

namespace inrseg {
namespace {

// Stream salts keep the draws of different consumers of one seed apart.
constexpr std::uint64_t kRandomInitSalt = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kSensitivitySalt = 0xc2b2ae3d27d4eb4fULL;

SirenModel fresh_init(const SirenConfig& config, std::uint64_t seed, std::uint64_t key) {
  Rng rng = Rng::for_stream(seed ^ kRandomInitSalt, key);
  return siren_init(config, rng);
}

std::vector<double> dice_at_end(const TestEvaluation& e) {
  std::vector<double> out;
  for (const auto& pts : e.per_subject) out.push_back(pts.back().dice);
  return out;
}

}  // namespace

const char* strategy_name(InitStrategy s) {
  switch (s) {
    case InitStrategy::kRandom: return "random";
    case InitStrategy::kFixed: return "fixed";
    case InitStrategy::kMetaImageOnly: return "meta_image_only";
    case InitStrategy::kMetaSeg: return "metaseg";
  }
  return "unknown";
}

InitStrategy parse_strategy(const std::string& name) {
  for (InitStrategy s : {InitStrategy::kRandom, InitStrategy::kFixed, InitStrategy::kMetaImageOnly,
                         InitStrategy::kMetaSeg}) {
    if (name == strategy_name(s)) return s;
  }
  throw ConfigError("unknown initialization strategy '" + name + "'");
}

SirenModel TrainedPipeline::init_for(std::uint64_t key) const {
  if (strategy != InitStrategy::kRandom) return model;
  SirenModel m = fresh_init(model.config, seed, key);
  m.head = model.head;
  return m;
}

TrainedPipeline train_pipeline(const std::vector<Sample>& train, const std::vector<Sample>& val,
                               const PipelineConfig& config, InitStrategy strategy) {
  if (train.empty()) throw InputError("train_pipeline: empty training set");
  Rng rng(config.seed);
  const SirenModel init = siren_init(config.model, rng);

  TrainedPipeline p;
  p.strategy = strategy;
  p.seed = config.seed;
  p.model = init;

  MetaConfig meta = config.meta;
  meta.seed = config.seed;
  MetaTrainHooks hooks;
  hooks.on_step = [&p](const MetaLogRow& row) { p.meta_log.push_back(row); };
  if (strategy == InitStrategy::kMetaSeg) {
    meta.inner_loss = InnerLoss::kReconPlusCls;
    p.model = meta_train(train, val, init, meta, hooks).best_or_current();
  } else if (strategy == InitStrategy::kMetaImageOnly) {
    meta.inner_loss = InnerLoss::kReconOnly;
    meta.val_every = 0;
    p.model = meta_train(train, val, init, meta, hooks).model;
  }

  const FeatureDataset fd = build_feature_dataset(
      [&p](std::size_t j) { return p.init_for(j); }, train, config.meta.fit_steps,
      config.meta.lr_inner);
  HeadTrainConfig head = config.head;
  head.gamma = config.meta.gamma;
  head.seed = config.seed;
  HeadTrainResult refined = train_seg_head(fd, p.model.head, p.model.config.leaky_slope, head);
  p.model.head = std::move(refined.head);
  p.head_loss = std::move(refined.epoch_loss);
  return p;
}

std::vector<SweepPoint> overfit_sweep(const SirenModel& init, const Sample& sample,
                                      std::vector<std::size_t> checkpoints, double lr) {
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  if (checkpoints.empty()) return {};
  const CoordGrid grid = make_grid(sample.extents);
  const DenseArray targets = sample.targets();

  std::vector<SweepPoint> out;
  auto score = [&](std::size_t step, const SirenModel& m) {
    DenseArray recon;
    const std::vector<std::uint8_t> labels = decode_labels(m, grid.coords, nullptr, &recon);
    out.push_back({step, psnr(targets, recon),
                   dice(labels, sample.mask, m.config.num_classes).foreground_mean});
  };
  std::size_t next = 0;
  if (checkpoints[0] == 0) {
    score(0, init);
    ++next;
  }
  if (next < checkpoints.size()) {
    fit_reconstruction(init, grid.coords, targets, checkpoints.back(), lr,
                       [&](std::size_t step, const SirenModel& m) {
                         if (next < checkpoints.size() && step == checkpoints[next]) {
                           score(step, m);
                           ++next;
                         }
                       });
  }
  return out;
}

Summary TestEvaluation::dice_at(std::size_t checkpoint) const {
  const auto it = std::find(checkpoints.begin(), checkpoints.end(), checkpoint);
  if (it == checkpoints.end()) throw InputError("dice_at: step was not a checkpoint");
  const std::size_t k = static_cast<std::size_t>(it - checkpoints.begin());
  std::vector<double> v;
  for (const auto& pts : per_subject) v.push_back(pts[k].dice);
  return summarize(v);
}

Summary TestEvaluation::psnr_at(std::size_t checkpoint) const {
  const auto it = std::find(checkpoints.begin(), checkpoints.end(), checkpoint);
  if (it == checkpoints.end()) throw InputError("psnr_at: step was not a checkpoint");
  const std::size_t k = static_cast<std::size_t>(it - checkpoints.begin());
  std::vector<double> v;
  for (const auto& pts : per_subject) v.push_back(pts[k].psnr);
  return summarize(v);
}

TestEvaluation evaluate_test(const TrainedPipeline& pipeline, const std::vector<Sample>& test,
                             std::vector<std::size_t> checkpoints, double lr) {
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  TestEvaluation e;
  e.checkpoints = checkpoints;
  e.per_subject.resize(test.size());
  parallel_for(test.size(), [&](std::size_t i) {
    e.per_subject[i] = overfit_sweep(pipeline.init_for(kTestScanKeyBase + i), test[i], checkpoints, lr);
  });
  for (const Sample& s : test) e.subject_ids.push_back(s.id);
  return e;
}

std::vector<AblationRow> ablation_run(const std::vector<Sample>& train,
                                      const std::vector<Sample>& val,
                                      const std::vector<Sample>& test, const PipelineConfig& config,
                                      const std::vector<InitStrategy>& strategies) {
  if (test.empty()) throw InputError("ablation_run: empty test split");
  std::vector<AblationRow> rows;
  for (InitStrategy s : strategies) {
    const TrainedPipeline p = train_pipeline(train, val, config, s);
    const TestEvaluation e = evaluate_test(p, test, {config.meta.fit_steps}, config.meta.lr_inner);
    AblationRow row;
    row.strategy = s;
    row.dice = dice_at_end(e);
    row.summary = summarize(row.dice);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SensitivityRow> sensitivity_eval(const TrainedPipeline& pipeline,
                                             const std::vector<Sample>& test,
                                             const SensitivityConfig& config) {
  for (const Sample& s : test) {
    if (s.dims() != 2) throw InputError("sensitivity_eval: sample " + s.id + " is not 2D");
  }
  const std::size_t n = test.size();
  const std::size_t t = config.trials;
  // clean scores repeat per trial so both means run over aligned sequences
  std::vector<double> clean(n * t, 0.0), rot(n * t, 0.0), trans(n * t, 0.0);
  auto score = [&](const Sample& s, std::size_t i) {
    const Segmentation seg =
        infer_segment(pipeline.init_for(kTestScanKeyBase + i), s.image, config.fit_steps, config.lr);
    return dice(seg.labels, s.mask, pipeline.model.config.num_classes).foreground_mean;
  };
  parallel_for(n, [&](std::size_t i) {
    Rng rng = Rng::for_stream(config.seed ^ kSensitivitySalt, i);
    const double base = score(test[i], i);
    for (std::size_t k = 0; k < t; ++k) {
      clean[i * t + k] = base;
      const double mag = rng.uniform(config.rotation_deg[0], config.rotation_deg[1]);
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      rot[i * t + k] = score(augment_rigid(test[i], sign * mag, {0.0, 0.0}), i);

      const double dist = rng.uniform(config.translation_px[0], config.translation_px[1]);
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      trans[i * t + k] =
          score(augment_rigid(test[i], 0.0, {dist * std::sin(angle), dist * std::cos(angle)}), i);
    }
  });

  const double clean_mean = summarize(clean).mean;
  std::vector<SensitivityRow> rows;
  for (const auto& [name, values] : {std::pair{"rotation", &rot}, std::pair{"translation", &trans}}) {
    SensitivityRow r;
    r.perturbation = name;
    r.clean_dice = clean_mean;
    r.perturbed_dice = summarize(*values).mean;
    r.drop = r.clean_dice - r.perturbed_dice;
    r.relative_drop = r.clean_dice > 0.0 ? r.drop / r.clean_dice : 0.0;
    r.evaluations = values->size();
    rows.push_back(r);
  }
  return rows;
}

std::vector<std::uint8_t> resample_nearest(const std::vector<std::uint8_t>& labels,
                                           const Shape& from, const Shape& to) {
  if (from.size() != to.size()) throw InputError("resample_nearest: axis counts differ");
  if (labels.size() != shape_product(from)) throw DimensionError("resample_nearest: label count");
  const std::size_t d = to.size();
  // per axis: target index -> nearest source index, rounding half up
  std::vector<std::vector<std::size_t>> pick(d);
  for (std::size_t a = 0; a < d; ++a) {
    if (from[a] < 2 || to[a] < 2) throw InputError("resample_nearest: extents must be >= 2");
    for (std::size_t j = 0; j < to[a]; ++j) {
      const std::size_t num = 2 * j * (from[a] - 1) + (to[a] - 1);
      pick[a].push_back(num / (2 * (to[a] - 1)));
    }
  }
  std::vector<std::uint8_t> out(shape_product(to));
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t p = 0; p < out.size(); ++p) {
    std::size_t src = 0;
    for (std::size_t a = 0; a < d; ++a) src = src * from[a] + pick[a][idx[a]];
    out[p] = labels[src];
    for (std::size_t a = d; a-- > 0;) {
      if (++idx[a] < to[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

double super_resolution_agreement(const SirenModel& fitted, const Shape& extents,
                                  std::size_t factor) {
  if (factor < 1) throw InputError("super_resolution_agreement: factor must be >= 1");
  Shape hi = extents;
  for (std::size_t& e : hi) e *= factor;
  const std::vector<std::uint8_t> base = segment_at_resolution(fitted, extents);
  const std::vector<std::uint8_t> down = resample_nearest(segment_at_resolution(fitted, hi), hi, extents);
  std::size_t same = 0;
  for (std::size_t i = 0; i < base.size(); ++i) same += base[i] == down[i];
  return base.empty() ? 1.0 : static_cast<double>(same) / static_cast<double>(base.size());
}

}  // namespace inrseg
