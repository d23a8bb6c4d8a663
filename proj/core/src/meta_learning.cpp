#include "inrseg/meta_learning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "inrseg/errors.hpp"
#include "inrseg/grid.hpp"
#include "inrseg/losses.hpp"
#include "inrseg/metrics.hpp"
#include "inrseg/parallel.hpp"
#include "inrseg/rng.hpp"

namespace inrseg {
namespace {

FitResult run_fit(const SirenModel& init, const DenseArray& coords, const LossSpec& spec,
                  std::size_t steps, double lr, ParamScope scope, const FitObserver& observer) {
  FitResult out{init, {}};
  out.loss_history.reserve(steps);
  AdamState opt(AdamHyper{.lr = lr});
  for (std::size_t s = 0; s < steps; ++s) {
    ObjectiveResult obj = evaluate_objective(out.model, coords, spec);
    const double loss = obj.loss.total();
    if (!std::isfinite(loss)) throw DivergenceError("non-finite loss while fitting", s);
    out.loss_history.push_back(loss);
    adam_step(out.model, obj.grads, opt, scope);
    if (observer) observer(s + 1, out.model);
  }
  for (const DenseArray* p : param_tensors(out.model)) {
    if (!all_finite(*p)) throw DivergenceError("non-finite parameters after fitting", steps);
  }
  return out;
}

void check_compatible(const SirenModel& a, const SirenModel& b) {
  if (!(a.config == b.config)) throw DimensionError("outer_update: model configurations differ");
  const auto pa = param_tensors(a);
  const auto pb = param_tensors(b);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->shape() != pb[i]->shape()) {
      throw DimensionError("outer_update: parameter shape " + shape_to_string(pa[i]->shape()) +
                           " vs " + shape_to_string(pb[i]->shape()));
    }
  }
}

void round_array(DenseArray& a) {
  for (double& x : a.values()) x = static_cast<double>(static_cast<float>(x));
}

void round_model(SirenModel& m) {
  for (DenseArray* p : param_tensors(m)) round_array(*p);
}

}  // namespace

void MetaConfig::validate() const {
  if (inner_steps < 1) throw InputError("inner_steps must be >= 1");
  if (fit_steps < 1) throw InputError("fit_steps must be >= 1");
  if (!(lr_inner > 0.0) || !(lr_outer > 0.0)) throw InputError("learning rates must be > 0");
  if (!(gamma >= 0.0)) throw InputError("gamma must be >= 0");
  if (!(recon_bg_scale > 0.0 && recon_bg_scale <= 1.0))
    throw InputError("recon_bg_scale must be in (0, 1]");
  if (meta_batch < 1) throw InputError("meta_batch must be >= 1");
}

FitResult inner_fit(const SirenModel& init, const Sample& sample, std::size_t steps, double lr,
                    double gamma, double recon_bg_scale, InnerLoss mode) {
  if (sample.dims() != init.config.input_dim) {
    throw InputError("inner_fit: sample " + sample.id + " has " + std::to_string(sample.dims()) +
                     " axes, model expects " + std::to_string(init.config.input_dim));
  }
  const CoordGrid grid = make_grid(sample.extents);
  const DenseArray targets = sample.targets();
  const std::vector<double> weights = recon_bg_scale == 1.0
                                          ? std::vector<double>{}
                                          : sample.pixel_weights(recon_bg_scale);
  if (mode == InnerLoss::kReconOnly) {
    LossSpec spec{LossKind::kRecon, LossTargets{&targets, nullptr, weights}, gamma};
    return run_fit(init, grid.coords, spec, steps, lr, ParamScope::kInrOnly, {});
  }
  const DenseArray onehot = sample.one_hot();
  LossSpec spec{LossKind::kInner, LossTargets{&targets, &onehot, weights}, gamma};
  return run_fit(init, grid.coords, spec, steps, lr, ParamScope::kAll, {});
}

FitResult fit_reconstruction(const SirenModel& init, const DenseArray& coords,
                             const DenseArray& targets, std::size_t steps, double lr,
                             const FitObserver& observer) {
  LossSpec spec{LossKind::kRecon, LossTargets{&targets, nullptr, {}}, 0.0};
  return run_fit(init, coords, spec, steps, lr, ParamScope::kInrOnly, observer);
}

MetaState make_meta_state(const SirenModel& init) {
  MetaState s;
  s.model = init;
  s.best_model = init;
  return s;
}

void outer_update(MetaState& meta, std::span<const SirenModel> adapted, double beta,
                  OuterMode mode) {
  if (adapted.empty()) throw InputError("outer_update: no adapted parameters");
  for (const SirenModel& m : adapted) check_compatible(meta.model, m);

  // g = θ^t - mean_j θ'_j
  SirenGradients g = zero_gradients(meta.model);
  const auto gp = grad_tensors(g);
  const auto cur = param_tensors(std::as_const(meta.model));
  const double inv = 1.0 / static_cast<double>(adapted.size());
  for (std::size_t i = 0; i < gp.size(); ++i) {
    DenseArray mean = *param_tensors(adapted[0])[i];
    if (adapted.size() > 1) {
      mean.fill(0.0);
      for (const SirenModel& m : adapted) axpy_inplace(mean, inv, *param_tensors(m)[i]);
    }
    DenseArray& gi = *gp[i];
    for (std::size_t k = 0; k < gi.size(); ++k) gi[k] = (*cur[i])[k] - mean[k];
  }

  if (mode == OuterMode::kSgd) {
    const auto params = param_tensors(meta.model);
    for (std::size_t i = 0; i < params.size(); ++i) axpy_inplace(*params[i], -beta, *gp[i]);
  } else {
    meta.outer.hyper.lr = beta;
    adam_step(meta.model, g, meta.outer, ParamScope::kAll);
  }
  ++meta.step;
}

void outer_update(MetaState& meta, const SirenModel& adapted, double beta, OuterMode mode) {
  outer_update(meta, std::span<const SirenModel>(&adapted, 1), beta, mode);
}

ValidationResult validate(const SirenModel& model, const std::vector<Sample>& val,
                          std::size_t fit_steps, double lr) {
  if (val.empty()) throw InputError("validate: empty validation set");
  ValidationResult r;
  r.dice.assign(val.size(), 0.0);
  r.psnr.assign(val.size(), 0.0);
  parallel_for(val.size(), [&](std::size_t i) {
    const Sample& s = val[i];
    const CoordGrid grid = make_grid(s.extents);
    const DenseArray targets = s.targets();
    const FitResult fit = fit_reconstruction(model, grid.coords, targets, fit_steps, lr);
    const ForwardResult out = forward(fit.model, grid.coords, true);
    const std::vector<std::uint8_t> labels = argmax_rows(out.logits);
    r.dice[i] = dice(labels, s.mask, model.config.num_classes).foreground_mean;
    r.psnr[i] = psnr(targets, out.recon);
  });
  for (std::size_t i = 0; i < val.size(); ++i) {
    r.mean_dice += r.dice[i];
    r.mean_psnr += r.psnr[i];
  }
  r.mean_dice /= static_cast<double>(val.size());
  r.mean_psnr /= static_cast<double>(val.size());
  return r;
}

std::size_t steps_per_epoch(std::size_t train_count, std::size_t meta_batch) {
  return (train_count + meta_batch - 1) / meta_batch;
}

MetaState meta_train(const std::vector<Sample>& train, const std::vector<Sample>& val,
                     const SirenModel& init, const MetaConfig& config, const MetaTrainHooks& hooks,
                     const MetaState* resume) {
  config.validate();
  if (train.empty()) throw InputError("meta_train: empty training set");
  for (const Sample& s : train) {
    if (s.dims() != init.config.input_dim)
      throw InputError("meta_train: sample " + s.id + " does not match the model's input dimension");
  }

  MetaState state = resume ? *resume : make_meta_state(init);
  const std::size_t per_epoch = steps_per_epoch(train.size(), config.meta_batch);
  const std::uint64_t total = static_cast<std::uint64_t>(per_epoch) * config.epochs;

  std::vector<std::size_t> order;
  std::size_t order_epoch = static_cast<std::size_t>(-1);
  while (state.step < total) {
    const std::size_t epoch = static_cast<std::size_t>(state.step / per_epoch);
    const std::size_t within = static_cast<std::size_t>(state.step % per_epoch);
    if (epoch != order_epoch) {
      order = Rng::for_stream(config.seed, epoch).permutation(train.size());
      order_epoch = epoch;
    }
    const std::size_t begin = within * config.meta_batch;
    const std::size_t end = std::min(begin + config.meta_batch, train.size());

    std::vector<FitResult> fits(end - begin);
    try {
      parallel_for(fits.size(), [&](std::size_t k) {
        fits[k] = inner_fit(state.model, train[order[begin + k]], config.inner_steps,
                            config.lr_inner, config.gamma, config.recon_bg_scale, config.inner_loss);
      });
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string("meta_train inner fit diverged: ") + e.what(),
                            static_cast<std::size_t>(state.step));
    }
    std::vector<SirenModel> adapted;
    adapted.reserve(fits.size());
    MetaLogRow row;
    for (FitResult& f : fits) {
      row.inner_loss_first += f.loss_history.front() / static_cast<double>(fits.size());
      row.inner_loss_last += f.loss_history.back() / static_cast<double>(fits.size());
      adapted.push_back(std::move(f.model));
    }
    outer_update(state, adapted, config.lr_outer, config.outer_mode);
    for (const DenseArray* p : param_tensors(state.model)) {
      if (!all_finite(*p))
        throw DivergenceError("meta_train produced non-finite parameters",
                              static_cast<std::size_t>(state.step));
    }
    row.outer_step = state.step;

    if (config.val_every > 0 && !val.empty() && state.step % config.val_every == 0) {
      const ValidationResult v = validate(state.model, val, config.val_fit_steps, config.lr_inner);
      row.val_dice = v.mean_dice;
      row.val_psnr = v.mean_psnr;
      if (!state.has_best || v.mean_dice > state.best_score) {
        state.best_model = state.model;
        state.best_score = v.mean_dice;
        state.best_step = state.step;
        state.has_best = true;
      }
    }
    if (hooks.on_step) hooks.on_step(row);

    const bool boundary = state.step == total ||
                          (config.checkpoint_every > 0 && state.step % config.checkpoint_every == 0);
    if (boundary) {
      round_to_checkpoint_precision(state);
      if (hooks.on_checkpoint) hooks.on_checkpoint(state);
    }
  }
  return state;
}

void round_to_checkpoint_precision(MetaState& state) {
  round_model(state.model);
  round_model(state.best_model);
  for (DenseArray& a : state.outer.m) round_array(a);
  for (DenseArray& a : state.outer.v) round_array(a);
  if (state.has_best) state.best_score = static_cast<double>(static_cast<float>(state.best_score));
}

CheckpointData to_checkpoint(const MetaState& state) {
  CheckpointData data;
  data.model = state.model;
  data.meta_step = state.step;
  const auto params = param_tensors(state.model);
  const std::size_t count = params.size();
  for (std::size_t i = 0; i < count; ++i)
    data.extra.push_back(state.outer.m.empty() ? DenseArray(params[i]->shape()) : state.outer.m[i]);
  for (std::size_t i = 0; i < count; ++i)
    data.extra.push_back(state.outer.v.empty() ? DenseArray(params[i]->shape()) : state.outer.v[i]);
  data.extra.push_back(DenseArray::vector({state.has_best ? 1.0 : 0.0,
                                           state.has_best ? state.best_score : 0.0,
                                           static_cast<double>(state.best_step),
                                           static_cast<double>(state.outer.t)}));
  for (const DenseArray* p : param_tensors(state.best_model)) data.extra.push_back(*p);
  return data;
}

MetaState from_checkpoint(const CheckpointData& data, const AdamHyper& outer_hyper) {
  MetaState s = make_meta_state(data.model);
  s.outer = AdamState(outer_hyper);
  s.step = data.meta_step;
  if (data.extra.empty()) return s;
  const std::size_t count = param_tensors(data.model).size();
  if (data.extra.size() != 3 * count + 1)
    throw DataError("checkpoint: unexpected number of optimizer-state arrays");
  const auto params = param_tensors(data.model);
  for (std::size_t i = 0; i < 3 * count + 1; ++i) {
    if (i == 2 * count) continue;
    const Shape& want = params[i < 2 * count ? i % count : i - 2 * count - 1]->shape();
    if (data.extra[i].shape() != want) throw DataError("checkpoint: optimizer-state shape mismatch");
  }
  const DenseArray& info = data.extra[2 * count];
  if (info.size() != 4) throw DataError("checkpoint: malformed training-state record");
  s.outer.t = static_cast<std::uint64_t>(info[3]);
  if (s.outer.t > 0) {
    s.outer.m.assign(data.extra.begin(), data.extra.begin() + count);
    s.outer.v.assign(data.extra.begin() + count, data.extra.begin() + 2 * count);
  }
  s.has_best = info[0] != 0.0;
  s.best_score = s.has_best ? info[1] : -std::numeric_limits<double>::infinity();
  s.best_step = static_cast<std::uint64_t>(info[2]);
  const auto best = param_tensors(s.best_model);
  for (std::size_t i = 0; i < count; ++i) *best[i] = data.extra[2 * count + 1 + i];
  return s;
}

}  // namespace inrseg
