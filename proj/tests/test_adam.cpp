#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "inrseg/adam.hpp"
#include "inrseg/errors.hpp"

using namespace inrseg;

namespace {

struct ScalarAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double p, double g, const AdamHyper& h) {
    ++t;
    m = h.beta1 * m + (1.0 - h.beta1) * g;
    v = h.beta2 * v + (1.0 - h.beta2) * g * g;
    const double mh = m / (1.0 - std::pow(h.beta1, t));
    const double vh = v / (1.0 - std::pow(h.beta2, t));
    return p - h.lr * mh / (std::sqrt(vh) + h.eps);
  }
};

}  // namespace

TEST_CASE("first Adam step moves each entry by lr g / (|g| + eps)") {
  DenseArray p = DenseArray::vector({1.0, -2.0, 0.5, 0.0});
  const DenseArray g = DenseArray::vector({0.3, -4.0, 1e-3, 0.0});
  AdamState st(AdamHyper{.lr = 0.01});
  DenseArray* ps[] = {&p};
  const DenseArray* gs[] = {&g};
  adam_step(ps, gs, st);
  const std::vector<double> before{1.0, -2.0, 0.5, 0.0};
  for (std::size_t i = 0; i < 4; ++i) {
    const double expect = before[i] - 0.01 * g[i] / (std::abs(g[i]) + 1e-8);
    CHECK(p[i] == doctest::Approx(expect).epsilon(1e-14));
  }
  CHECK(st.t == 1);
}

TEST_CASE("Adam trajectory matches the scalar recurrence") {
  Rng rng(2);
  AdamHyper h{.lr = 3e-3, .beta1 = 0.8, .beta2 = 0.99, .eps = 1e-7};
  DenseArray p(Shape{5});
  for (double& v : p.values()) v = rng.uniform(-1, 1);
  std::vector<ScalarAdam> ref(5);
  std::vector<double> q(p.values().begin(), p.values().end());
  AdamState st(h);
  for (int step = 0; step < 50; ++step) {
    DenseArray g(Shape{5});
    for (double& v : g.values()) v = rng.uniform(-2, 2);
    DenseArray* ps[] = {&p};
    const DenseArray* gs[] = {&g};
    adam_step(ps, gs, st);
    for (std::size_t i = 0; i < 5; ++i) q[i] = ref[i].step(q[i], g[i], h);
  }
  for (std::size_t i = 0; i < 5; ++i) CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-13));
}

TEST_CASE("Adam rejects a change of tensor shapes") {
  DenseArray p(Shape{3}), g(Shape{3});
  AdamState st;
  DenseArray* ps[] = {&p};
  const DenseArray* gs[] = {&g};
  adam_step(ps, gs, st);
  DenseArray p2(Shape{4}), g2(Shape{4});
  DenseArray* ps2[] = {&p2};
  const DenseArray* gs2[] = {&g2};
  CHECK_THROWS_AS(adam_step(ps2, gs2, st), DimensionError);
}

TEST_CASE("scoped model update leaves the other parameters alone") {
  SirenModel m = fixtures::tiny_model(3);
  const SirenModel before = m;
  SirenGradients g = zero_gradients(m);
  for (DenseArray* t : grad_tensors(g)) t->fill(1.0);
  AdamState st;
  adam_step(m, g, st, ParamScope::kInrOnly);
  CHECK(m.head == before.head);
  CHECK_FALSE(m.inr == before.inr);

  SirenModel m2 = before;
  AdamState st2;
  adam_step(m2, g, st2, ParamScope::kHeadOnly);
  CHECK(m2.inr == before.inr);
  CHECK_FALSE(m2.head == before.head);
}
