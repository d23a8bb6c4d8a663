#include <cmath>
#include <filesystem>
#include <limits>
#include <utility>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "inrseg/checkpoint.hpp"
#include "inrseg/errors.hpp"
#include "inrseg/grid.hpp"
#include "inrseg/meta_learning.hpp"
#include "oracles.hpp"

using namespace inrseg;

namespace {

SirenModel shifted(const SirenModel& m, double by) {
  SirenModel out = m;
  for (DenseArray* p : param_tensors(out))
    for (double& v : p->values()) v += by;
  return out;
}

double max_param_diff(const SirenModel& a, const SirenModel& b) {
  const auto pa = param_tensors(a), pb = param_tensors(b);
  double d = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) d = std::max(d, max_abs_diff(*pa[i], *pb[i]));
  return d;
}

struct TinyData {
  std::vector<Sample> train, val;
  SirenModel init;
};

TinyData tiny_data(std::size_t train = 6, std::size_t val = 2) {
  const SynthSpec spec = fixtures::small_spec(16, 4, 3);
  const std::vector<Sample> all = generate_synthetic(spec, train, val, 0);
  TinyData d{select_split(all, Split::kTrain), select_split(all, Split::kVal), {}};
  d.init = fixtures::tiny_model(5, fixtures::tiny_config(2, 16, 3, 4));
  return d;
}

MetaConfig tiny_meta() {
  MetaConfig c;
  c.epochs = 2;
  c.inner_steps = 2;
  c.lr_inner = 1e-3;
  c.lr_outer = 1e-3;
  c.val_every = 3;
  c.val_fit_steps = 3;
  c.fit_steps = 3;
  c.seed = 17;
  return c;
}

}  // namespace

TEST_CASE("SGD outer step interpolates toward the adapted parameters") {
  const SirenModel theta = fixtures::tiny_model(1);
  const SirenModel adapted = shifted(fixtures::tiny_model(2), 0.25);

  MetaState full = make_meta_state(theta);
  outer_update(full, adapted, 1.0, OuterMode::kSgd);
  CHECK(max_param_diff(full.model, adapted) <= 1e-12);
  CHECK(full.step == 1);

  MetaState half = make_meta_state(theta);
  outer_update(half, adapted, 0.5, OuterMode::kSgd);
  const auto pt = param_tensors(theta), pa = param_tensors(adapted);
  const auto ph = param_tensors(std::as_const(half.model));
  double worst = 0.0;
  for (std::size_t t = 0; t < pt.size(); ++t)
    for (std::size_t i = 0; i < pt[t]->size(); ++i)
      worst = std::max(worst, std::abs((*ph[t])[i] - 0.5 * ((*pt[t])[i] + (*pa[t])[i])));
  CHECK(worst <= 1e-12);
}

TEST_CASE("zero outer rate leaves the parameters unchanged") {
  const SirenModel theta = fixtures::tiny_model(1);
  MetaState st = make_meta_state(theta);
  for (int i = 0; i < 100; ++i) outer_update(st, shifted(theta, 0.1 * (i + 1)), 0.0, OuterMode::kSgd);
  CHECK(st.model == theta);
  CHECK(st.step == 100);
}

TEST_CASE("meta-batch outer step uses the mean adaptation") {
  const SirenModel theta = fixtures::tiny_model(1);
  const std::vector<SirenModel> adapted{shifted(theta, 0.2), shifted(theta, -0.6)};
  MetaState st = make_meta_state(theta);
  outer_update(st, adapted, 1.0, OuterMode::kSgd);
  CHECK(max_param_diff(st.model, shifted(theta, -0.2)) <= 1e-12);
}

TEST_CASE("Adam outer step moves every parameter toward the adapted model") {
  const SirenModel theta = fixtures::tiny_model(1);
  const SirenModel adapted = shifted(theta, 0.5);
  MetaState st = make_meta_state(theta);
  outer_update(st, adapted, 1e-3, OuterMode::kAdam);
  // first Adam step: every entry moves by lr * g / (|g| + eps) with g = -0.5
  CHECK(max_param_diff(st.model, shifted(theta, 1e-3 * 0.5 / (0.5 + 1e-8))) < 1e-15);
  CHECK(st.outer.t == 1);
}

TEST_CASE("outer update rejects mismatched architectures") {
  MetaState st = make_meta_state(fixtures::tiny_model(1));
  const SirenModel other = fixtures::tiny_model(1, fixtures::tiny_config(2, 9, 3, 3));
  CHECK_THROWS_AS(outer_update(st, other, 0.5, OuterMode::kSgd), DimensionError);
  CHECK_THROWS_AS(outer_update(st, std::span<const SirenModel>{}, 0.5, OuterMode::kSgd),
                  InputError);
}

TEST_CASE("inner fit: history, scope and fresh optimizer state") {
  const TinyData d = tiny_data(1, 0);
  const Sample& s = d.train[0];
  const FitResult a = inner_fit(d.init, s, 4, 1e-3, 1.0, 1.0, InnerLoss::kReconPlusCls);
  CHECK(a.loss_history.size() == 4);
  const CoordGrid g = make_grid(s.extents);
  const double first = oracle::objective(d.init, g.coords, s.targets(), s.mask, 1.0,
                                         oracle::Kind::kInner);
  CHECK(a.loss_history[0] == doctest::Approx(first).epsilon(1e-12));
  CHECK(a.loss_history.back() < a.loss_history.front());
  CHECK_FALSE(a.model.head == d.init.head);

  const FitResult b = inner_fit(d.init, s, 4, 1e-3, 1.0, 1.0, InnerLoss::kReconPlusCls);
  CHECK(a.model == b.model);

  const FitResult r = inner_fit(d.init, s, 4, 1e-3, 1.0, 1.0, InnerLoss::kReconOnly);
  CHECK(r.model.head == d.init.head);
  CHECK_FALSE(r.model.inr == d.init.inr);
}

TEST_CASE("fitting reports divergence with the step") {
  const TinyData d = tiny_data(1, 0);
  SirenModel bad = d.init;
  bad.inr.layers.back().bias[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    inner_fit(bad, d.train[0], 3, 1e-3, 1.0, 1.0, InnerLoss::kReconPlusCls);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.step() == 0);
  }
}

TEST_CASE("meta config validation") {
  MetaConfig c = tiny_meta();
  CHECK_NOTHROW(c.validate());
  c.recon_bg_scale = 0.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = tiny_meta();
  c.inner_steps = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = tiny_meta();
  c.lr_outer = -1.0;
  CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("steps per epoch") {
  CHECK(steps_per_epoch(6, 1) == 6);
  CHECK(steps_per_epoch(6, 4) == 2);
  CHECK(steps_per_epoch(8, 4) == 2);
}

TEST_CASE("meta_train logs one row per outer step and keeps the best snapshot") {
  const TinyData d = tiny_data();
  MetaConfig c = tiny_meta();
  std::vector<MetaLogRow> rows;
  MetaTrainHooks hooks;
  hooks.on_step = [&](const MetaLogRow& r) { rows.push_back(r); };
  const MetaState st = meta_train(d.train, d.val, d.init, c, hooks);
  CHECK(st.step == 12);
  REQUIRE(rows.size() == 12);
  double best = -1.0;
  std::uint64_t best_step = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].outer_step == i + 1);
    CHECK(rows[i].val_dice.has_value() == ((i + 1) % 3 == 0));
    if (rows[i].val_dice && *rows[i].val_dice > best) {
      best = *rows[i].val_dice;
      best_step = rows[i].outer_step;
    }
  }
  REQUIRE(st.has_best);
  CHECK(st.best_step == best_step);
  CHECK(st.best_score == doctest::Approx(best).epsilon(1e-6));
  CHECK(&st.best_or_current() == &st.best_model);
}

TEST_CASE("meta_train is deterministic and resumes bitwise") {
  const TinyData d = tiny_data();
  MetaConfig c = tiny_meta();
  c.checkpoint_every = 5;
  const MetaState whole = meta_train(d.train, d.val, d.init, c);
  CHECK(whole.model == meta_train(d.train, d.val, d.init, c).model);

  const std::filesystem::path ckpt =
      std::filesystem::temp_directory_path() / "inrseg_test_resume.ckpt";
  MetaTrainHooks hooks;
  hooks.on_checkpoint = [&](const MetaState& st) {
    if (st.step == 5) write_checkpoint(ckpt, to_checkpoint(st));
  };
  meta_train(d.train, d.val, d.init, c, hooks);

  const MetaState restored = from_checkpoint(read_checkpoint(ckpt), AdamHyper{.lr = c.lr_outer});
  CHECK(restored.step == 5);
  const MetaState resumed = meta_train(d.train, d.val, d.init, c, {}, &restored);
  CHECK(resumed.step == whole.step);
  CHECK(resumed.model == whole.model);
  CHECK(resumed.best_model == whole.best_model);
  CHECK(resumed.best_step == whole.best_step);
  CHECK(resumed.outer.m == whole.outer.m);
  CHECK(resumed.outer.v == whole.outer.v);
  std::filesystem::remove(ckpt);
}

TEST_CASE("checkpoint state round trip") {
  const TinyData d = tiny_data();
  const MetaState st = meta_train(d.train, d.val, d.init, tiny_meta());
  const MetaState back = from_checkpoint(to_checkpoint(st), AdamHyper{.lr = 1e-3});
  CHECK(back.model == st.model);
  CHECK(back.best_model == st.best_model);
  CHECK(back.best_score == st.best_score);
  CHECK(back.has_best == st.has_best);
  CHECK(back.outer.t == st.outer.t);
  CHECK(back.outer.m == st.outer.m);

  CheckpointData plain{st.model, 7, {}};
  const MetaState fresh = from_checkpoint(plain, AdamHyper{});
  CHECK(fresh.step == 7);
  CHECK_FALSE(fresh.has_best);
  CHECK(fresh.outer.t == 0);
}

TEST_CASE("validation scores every scan") {
  const TinyData d = tiny_data(1, 3);
  const ValidationResult v = validate(d.init, d.val, 2, 1e-3);
  CHECK(v.dice.size() == 3);
  CHECK(v.psnr.size() == 3);
  double mean = 0.0;
  for (double x : v.dice) mean += x / 3.0;
  CHECK(v.mean_dice == doctest::Approx(mean));
  CHECK_THROWS_AS(validate(d.init, {}, 2, 1e-3), InputError);
}
