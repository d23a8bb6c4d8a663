#include <cmath>
#include <limits>

#include "doctest.h"
#include "fixtures.hpp"
#include "inrseg/errors.hpp"
#include "inrseg/run_config.hpp"
#include "inrseg/siren.hpp"
#include "oracles.hpp"

using namespace inrseg;

TEST_CASE("parameter count follows the layer sizes") {
  for (std::size_t L : {2, 3, 6})
    for (std::size_t h : {4, 16}) {
      SirenConfig c = fixtures::tiny_config(3, h, L, 5);
      c.head_hidden_width = 7;
      c.output_dim = 2;
      CHECK(c.parameter_count() == oracle::parameter_count(3, 2, L, h, 5, 7));
      Rng rng(0);
      const SirenModel m = siren_init(c, rng);
      std::size_t n = 0;
      for (const DenseArray* p : param_tensors(m)) n += p->size();
      CHECK(n == c.parameter_count());
    }
}

TEST_CASE("task presets reproduce the published model sizes") {
  CHECK(preset(Task::kSeg2dCoarse).model.parameter_count() == 83718);    // ~83K
  CHECK(preset(Task::kSeg2dFine).model.parameter_count() == 1064985);    // ~1.06M
  CHECK(preset(Task::kSeg3d).model.parameter_count() == 331526);         // ~330K
}

TEST_CASE("the 3D preset needs six layers to reach ~330K parameters") {
  // 5 layers at width 256 give 265,734 scalars, far from 330K; 6 layers give 331,526.
  CHECK(oracle::parameter_count(3, 1, 5, 256, 5, 256) == 265734);
  CHECK(oracle::parameter_count(3, 1, 6, 256, 5, 256) == 331526);
  const SirenConfig m = preset(Task::kSeg3d).model;
  CHECK(m.num_layers == 6);
  CHECK(m.hidden_width == 256);
  CHECK(m.input_dim == 3);
}

TEST_CASE("initialization bounds and zero biases") {
  SirenConfig c = fixtures::tiny_config(2, 64, 4, 4);
  Rng rng(1);
  const SirenModel m = siren_init(c, rng);
  auto max_abs = [](const DenseArray& a) {
    double v = 0.0;
    for (double x : a.values()) v = std::max(v, std::abs(x));
    return v;
  };
  CHECK(max_abs(m.inr.layers[0].weight) <= 0.5);
  CHECK(max_abs(m.inr.layers[0].weight) > 0.45);
  const double deep = std::sqrt(6.0 / 64.0) / 30.0;
  for (std::size_t l = 1; l < 4; ++l) {
    CHECK(max_abs(m.inr.layers[l].weight) <= deep);
    CHECK(max_abs(m.inr.layers[l].weight) > 0.9 * deep);
  }
  CHECK(max_abs(m.head.hidden.weight) <= std::sqrt(6.0 / 64.0));
  CHECK(max_abs(m.head.hidden.weight) > 0.9 * std::sqrt(6.0 / 64.0));
  for (const auto& l : m.inr.layers) CHECK(max_abs(l.bias) == 0.0);
  CHECK(max_abs(m.head.hidden.bias) == 0.0);
  CHECK(max_abs(m.head.output.bias) == 0.0);
}

TEST_CASE("initialization is seed-determined") {
  const SirenConfig c = fixtures::tiny_config();
  Rng a(7), b(7), d(8);
  CHECK(siren_init(c, a) == siren_init(c, b));
  CHECK_FALSE(siren_init(c, a) == siren_init(c, d));
}

TEST_CASE("forward pass matches the scalar oracle") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SirenConfig c = fixtures::tiny_config(seed % 2 ? 3 : 2, 8, 3 + seed % 3, 4);
    c.output_dim = 1 + seed % 2;
    const SirenModel m = fixtures::tiny_model(seed, c);
    const DenseArray x = fixtures::random_coords(20, c.input_dim, seed + 50);
    const ForwardResult r = forward(m, x, true);
    REQUIRE(r.recon.shape() == Shape{20, c.output_dim});
    REQUIRE(r.logits.shape() == Shape{20, 4});
    double worst = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
      const oracle::Row o = oracle::forward_row(m, oracle::row_of(x, i));
      for (std::size_t k = 0; k < o.recon.size(); ++k)
        worst = std::max(worst, std::abs(o.recon[k] - r.recon(i, k)));
      for (std::size_t k = 0; k < o.logits.size(); ++k)
        worst = std::max(worst, std::abs(o.logits[k] - r.logits(i, k)));
      for (std::size_t k = 0; k < o.features.size(); ++k)
        worst = std::max(worst, std::abs(o.features[k] - r.trace.penultimate()(i, k)));
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("forward without the head leaves logits empty") {
  const SirenModel m = fixtures::tiny_model(3);
  const ForwardResult r = forward(m, fixtures::random_coords(4, 2, 1), false);
  CHECK(r.logits.size() == 0);
  CHECK_FALSE(r.trace.has_head);
  CHECK(r.recon.shape() == Shape{4, 1});
}

TEST_CASE("forward rejects bad coordinates") {
  const SirenModel m = fixtures::tiny_model(3);
  DenseArray x = fixtures::random_coords(4, 2, 1);
  x(2, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(forward(m, x), InputError);
  CHECK_THROWS_AS(forward(m, fixtures::random_coords(4, 3, 1)), InputError);
}

TEST_CASE("config validation") {
  SirenConfig c = fixtures::tiny_config();
  CHECK_NOTHROW(c.validate());
  c.num_layers = 1;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = fixtures::tiny_config();
  c.num_classes = 1;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = fixtures::tiny_config();
  c.input_dim = 4;
  CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("parameter scopes partition the tensors") {
  SirenModel m = fixtures::tiny_model(1);
  const std::size_t all = param_tensors(m).size();
  CHECK(all == 2 * m.config.num_layers + 4);
  CHECK(param_tensors(m, ParamScope::kInrOnly).size() == 2 * m.config.num_layers);
  CHECK(param_tensors(m, ParamScope::kHeadOnly).size() == 4);
}
