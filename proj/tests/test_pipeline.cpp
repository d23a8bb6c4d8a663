#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "inrseg/errors.hpp"
#include "inrseg/grid.hpp"
#include "inrseg/harness.hpp"
#include "inrseg/seg_pipeline.hpp"
#include "oracles.hpp"

using namespace inrseg;

namespace {

struct Small {
  std::vector<Sample> train, val, test;
  SirenModel init;
};

Small small(std::size_t extent = 16) {
  const std::vector<Sample> all = generate_synthetic(fixtures::small_spec(extent, 4, 8), 4, 2, 2);
  Small s{select_split(all, Split::kTrain), select_split(all, Split::kVal),
          select_split(all, Split::kTest), {}};
  s.init = fixtures::tiny_model(3, fixtures::tiny_config(2, 16, 3, 4));
  return s;
}

PipelineConfig small_pipeline() {
  PipelineConfig p;
  p.model = fixtures::tiny_config(2, 16, 3, 4);
  p.meta.epochs = 1;
  p.meta.fit_steps = 5;
  p.meta.val_every = 2;
  p.meta.val_fit_steps = 2;
  p.head.max_epochs = 4;
  p.head.batch_rows = 128;
  p.seed = 4;
  p.meta.seed = 4;
  p.head.seed = 4;
  return p;
}

}  // namespace

TEST_CASE("feature dataset: shapes, offsets and labels") {
  const Small s = small();
  const FeatureDataset f = build_feature_dataset(s.init, s.train, 3, 1e-4);
  CHECK(f.subjects() == 4);
  CHECK(f.rows() == 4 * 256);
  CHECK(f.features.shape() == Shape{1024, 16});
  CHECK(f.row_offsets == std::vector<std::size_t>{0, 256, 512, 768, 1024});
  CHECK(f.fit_psnr.size() == 4);
  CHECK(f.num_classes == 4);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(f.subject_ids[j] == s.train[j].id);
    CHECK(std::equal(s.train[j].mask.begin(), s.train[j].mask.end(),
                     f.labels.begin() + static_cast<std::ptrdiff_t>(f.row_offsets[j])));
  }
}

TEST_CASE("zero-step harvest returns the initialization's own features") {
  const Small s = small();
  const FeatureDataset f = build_feature_dataset(s.init, s.train, 0, 1e-4);
  const CoordGrid g = make_grid(s.train[1].extents);
  for (std::size_t i = 0; i < 256; i += 17) {
    const auto row = oracle::forward_row(s.init, oracle::row_of(g.coords, i));
    for (std::size_t k = 0; k < 16; ++k)
      CHECK(f.features(256 + i, k) == doctest::Approx(row.features[k]).epsilon(1e-12));
  }
}

TEST_CASE("head training lowers the focal loss and honours the epoch cap") {
  const Small s = small();
  const FeatureDataset f = build_feature_dataset(s.init, s.train, 3, 1e-4);
  HeadTrainConfig c;
  c.lr = 1e-3;
  c.max_epochs = 6;
  c.batch_rows = 64;
  c.plateau_tol = 0.0;
  const HeadTrainResult r = train_seg_head(f, s.init.head, s.init.config.leaky_slope, c);
  REQUIRE(r.epoch_loss.size() == 6);
  CHECK(r.epoch_loss.back() < r.epoch_loss.front());
  CHECK(train_seg_head(f, s.init.head, s.init.config.leaky_slope, c).head == r.head);

  c.plateau_tol = 10.0;
  c.plateau_window = 2;
  CHECK(train_seg_head(f, s.init.head, s.init.config.leaky_slope, c).epoch_loss.size() == 3);
  CHECK_THROWS_AS(train_seg_head(FeatureDataset{}, s.init.head, 0.01, c), InputError);
}

TEST_CASE("head learning rate rule") {
  CHECK(head_learning_rate(5) == 5e-5);
  CHECK(head_learning_rate(4) == 1e-4);
  CHECK(head_learning_rate(24, 2e-4) == 2e-4);
}

TEST_CASE("segmentation without fitting decodes the initialization") {
  const Small s = small();
  const Sample& t = s.test[0];
  const Segmentation seg = infer_segment(s.init, t.image, 0, 1e-4);
  CHECK(seg.extents == t.extents);
  CHECK(seg.labels.size() == t.pixels());
  CHECK(seg.probs.shape() == Shape{t.pixels(), 4});
  CHECK(seg.recon.shape() == Shape{t.pixels(), 1});
  CHECK(seg.fit_curve.empty());
  CHECK(seg.fitted == s.init);
  const CoordGrid g = make_grid(t.extents);
  for (std::size_t i = 0; i < t.pixels(); i += 13) {
    const auto row = oracle::forward_row(s.init, oracle::row_of(g.coords, i));
    const auto p = oracle::softmax(row.logits);
    const auto best = static_cast<std::uint8_t>(std::max_element(p.begin(), p.end()) - p.begin());
    CHECK(seg.labels[i] == best);
    double sum = 0.0;
    for (std::size_t k = 0; k < 4; ++k) sum += seg.probs(i, k);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("fitting reconstructs and leaves the head frozen") {
  const Small s = small();
  const Sample& t = s.test[1];
  std::size_t calls = 0;
  const Segmentation seg = infer_segment(s.init, t.image, 8, 1e-4,
                                         [&](std::size_t, const SirenModel&) { ++calls; });
  CHECK(seg.fit_curve.size() == 8);
  CHECK(calls == 8);
  CHECK(seg.fit_curve.back() < seg.fit_curve.front());
  CHECK(seg.fitted.head == s.init.head);
  CHECK(seg.psnr == doctest::Approx(-10.0 * std::log10(oracle::mse(t.image, seg.recon))));
  CHECK_THROWS_AS(infer_segment(s.init, DenseArray(Shape{4, 4, 4, 1}), 1, 1e-4), InputError);
}

TEST_CASE("nearest resampling") {
  const std::vector<std::uint8_t> a{0, 1, 2, 3};
  CHECK(resample_nearest(a, Shape{2, 2}, Shape{2, 2}) == a);
  const auto up = resample_nearest(a, Shape{2, 2}, Shape{4, 4});
  CHECK(up == std::vector<std::uint8_t>{0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 3, 3, 2, 2, 3, 3});
  CHECK(resample_nearest(up, Shape{4, 4}, Shape{2, 2}) == a);
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const auto l = fixtures::random_labels(35, 4, static_cast<std::uint64_t>(trial));
    CHECK(resample_nearest(resample_nearest(l, Shape{5, 7}, Shape{10, 14}), Shape{10, 14},
                           Shape{5, 7}) == l);
  }
  CHECK_THROWS(resample_nearest(a, Shape{2, 2}, Shape{4, 4, 4}));
}

TEST_CASE("multi-resolution decoding") {
  const Small s = small();
  const std::vector<std::uint8_t> base = segment_at_resolution(s.init, Shape{16, 16});
  CHECK(base == infer_segment(s.init, s.test[0].image, 0, 1e-4).labels);
  CHECK(segment_at_resolution(s.init, Shape{32, 32}).size() == 1024);
  CHECK(super_resolution_agreement(s.init, Shape{16, 16}, 1) == 1.0);
  const double a = super_resolution_agreement(s.init, Shape{16, 16}, 2);
  CHECK(a >= 0.0);
  CHECK(a <= 1.0);
  CHECK_THROWS_AS(segment_at_resolution(s.init, Shape{8, 8, 8}), InputError);
}

TEST_CASE("overfit sweep scores every checkpoint of one continuous fit") {
  const Small s = small();
  const Sample& t = s.test[0];
  const auto pts = overfit_sweep(s.init, t, {6, 0, 3, 3}, 1e-4);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].step == 0);
  CHECK(pts[1].step == 3);
  CHECK(pts[2].step == 6);
  const Segmentation at3 = infer_segment(s.init, t.image, 3, 1e-4);
  CHECK(pts[1].psnr == at3.psnr);
  const Segmentation at6 = infer_segment(s.init, t.image, 6, 1e-4);
  CHECK(pts[2].psnr == at6.psnr);
  CHECK(pts[2].dice == dice(at6.labels, t.mask, 4).foreground_mean);
}

TEST_CASE("strategy names") {
  for (InitStrategy st : {InitStrategy::kRandom, InitStrategy::kFixed,
                          InitStrategy::kMetaImageOnly, InitStrategy::kMetaSeg})
    CHECK(parse_strategy(strategy_name(st)) == st);
  CHECK_THROWS_AS(parse_strategy("maml"), ConfigError);
}

TEST_CASE("pipelines per strategy") {
  const Small s = small();
  const PipelineConfig p = small_pipeline();
  const TrainedPipeline meta = train_pipeline(s.train, s.val, p, InitStrategy::kMetaSeg);
  CHECK(meta.meta_log.size() == 4);
  CHECK_FALSE(meta.head_loss.empty());
  CHECK(meta.init_for(0) == meta.init_for(1));
  CHECK(train_pipeline(s.train, s.val, p, InitStrategy::kMetaSeg).model == meta.model);

  const TrainedPipeline rnd = train_pipeline(s.train, s.val, p, InitStrategy::kRandom);
  CHECK(rnd.meta_log.empty());
  CHECK_FALSE(rnd.init_for(0).inr == rnd.init_for(1).inr);
  CHECK(rnd.init_for(0).head == rnd.init_for(1).head);

  const TrainedPipeline fixed = train_pipeline(s.train, s.val, p, InitStrategy::kFixed);
  CHECK(fixed.meta_log.empty());
  CHECK(fixed.init_for(3).inr == fixed.init_for(9).inr);

  const TestEvaluation ev = evaluate_test(meta, s.test, {0, 2}, 1e-4);
  CHECK(ev.subject_ids.size() == 2);
  CHECK(ev.dice_at(2).count == 2);
  CHECK_THROWS(ev.dice_at(7));
}

TEST_CASE("ablation rows follow the requested order") {
  const Small s = small();
  const std::vector<InitStrategy> order{InitStrategy::kFixed, InitStrategy::kRandom};
  const auto rows = ablation_run(s.train, s.val, s.test, small_pipeline(), order);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].strategy == InitStrategy::kFixed);
  CHECK(rows[1].strategy == InitStrategy::kRandom);
  CHECK(rows[0].dice.size() == 2);
  CHECK(rows[0].summary.mean == doctest::Approx((rows[0].dice[0] + rows[0].dice[1]) / 2));
}

TEST_CASE("sensitivity: zero magnitude gives zero drop") {
  const Small s = small();
  const TrainedPipeline fixed = train_pipeline(s.train, s.val, small_pipeline(), InitStrategy::kFixed);
  SensitivityConfig c;
  c.rotation_deg = {0.0, 0.0};
  c.translation_px = {0.0, 0.0};
  c.fit_steps = 4;
  c.trials = 2;
  const auto rows = sensitivity_eval(fixed, s.test, c);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].perturbation == "rotation");
  CHECK(rows[1].perturbation == "translation");
  for (const auto& r : rows) {
    CHECK(r.drop == 0.0);
    CHECK(r.clean_dice == r.perturbed_dice);
    CHECK(r.evaluations == 4);
  }
  SensitivityConfig moved = c;
  moved.rotation_deg = {5.0, 15.0};
  CHECK(sensitivity_eval(fixed, s.test, moved) .size() == 2);
  Small vol = s;
  SynthSpec spec = fixtures::small_spec(8, 4, 1);
  spec.dims = 3;
  vol.test = generate_synthetic(spec, 0, 0, 1);
  CHECK_THROWS_AS(sensitivity_eval(fixed, vol.test, c), InputError);
}
