#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "inrseg/errors.hpp"
#include "inrseg/losses.hpp"
#include "oracles.hpp"

using namespace inrseg;

namespace {

gradcheck::Problem make_problem(std::uint64_t seed, std::size_t n = 12) {
  gradcheck::Problem p;
  p.model = fixtures::tiny_model(seed);
  p.coords = fixtures::random_coords(n, 2, seed + 1000);
  p.image = fixtures::random_coords(n, 1, seed + 2000);
  p.labels = fixtures::random_labels(n, 3, seed + 3000);
  return p;
}

double cross_entropy(const DenseArray& onehot, const DenseArray& probs) {
  double s = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i)
    for (std::size_t k = 0; k < probs.cols(); ++k)
      if (onehot(i, k) == 1.0) s -= std::log(probs(i, k));
  return s / static_cast<double>(probs.rows());
}

}  // namespace

TEST_CASE("analytic gradients agree with finite differences") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    CAPTURE(seed);
    const gradcheck::Problem p = make_problem(seed);
    CHECK(gradcheck::worst_error(p, oracle::Kind::kRecon, 0.0) < 1e-4);
    for (double gamma : {0.0, 2.0}) {
      CAPTURE(gamma);
      CHECK(gradcheck::worst_error(p, oracle::Kind::kFocal, gamma) < 1e-4);
      CHECK(gradcheck::worst_error(p, oracle::Kind::kInner, gamma) < 1e-4);
    }
  }
}

TEST_CASE("weighted reconstruction gradient") {
  gradcheck::Problem p = make_problem(7);
  p.weights.assign(p.coords.rows(), 1.0);
  for (std::size_t i = 0; i < p.weights.size(); i += 2) p.weights[i] = 0.1;
  CHECK(gradcheck::worst_error(p, oracle::Kind::kInner, 1.0) < 1e-4);
}

TEST_CASE("objective does not depend on the chunk size") {
  const gradcheck::Problem p = make_problem(4, 50);
  const DenseArray onehot = one_hot(p.labels, 3);
  LossSpec spec;
  spec.gamma = 1.5;
  spec.targets.image = &p.image;
  spec.targets.onehot = &onehot;
  const ObjectiveResult whole = evaluate_objective(p.model, p.coords, spec, 4096);
  const ObjectiveResult chunked = evaluate_objective(p.model, p.coords, spec, 7);
  CHECK(std::abs(whole.loss.total() - chunked.loss.total()) < 1e-14);
  const auto a = grad_tensors(whole.grads), b = grad_tensors(chunked.grads);
  for (std::size_t t = 0; t < a.size(); ++t) CHECK(max_abs_diff(*a[t], *b[t]) < 1e-14);
  const LossValue v = evaluate_loss(p.model, p.coords, spec, 7);
  CHECK(std::abs(v.total() - whole.loss.total()) < 1e-14);
  CHECK(std::abs(whole.loss.total() - oracle::objective(p.model, p.coords, p.image, p.labels, 1.5,
                                                        oracle::Kind::kInner)) < 1e-12);
}

TEST_CASE("focal loss with gamma 0 is cross-entropy") {
  Rng rng(3);
  DenseArray logits(Shape{40, 5});
  for (double& v : logits.values()) v = rng.uniform(-4.0, 4.0);
  const DenseArray probs = softmax(logits);
  const DenseArray onehot = one_hot(fixtures::random_labels(40, 5, 9), 5);
  CHECK(std::abs(loss_focal(onehot, probs, 0.0) - cross_entropy(onehot, probs)) <= 1e-12);
}

TEST_CASE("focal loss down-weights confident rows") {
  const DenseArray probs = DenseArray::matrix({{0.9, 0.1}});
  const DenseArray onehot = DenseArray::matrix({{1.0, 0.0}});
  const double ce = -std::log(0.9);
  CHECK(loss_focal(onehot, probs, 1.0) == doctest::Approx(0.1 * ce).epsilon(1e-14));
  CHECK(loss_focal(onehot, probs, 2.0) == doctest::Approx(0.01 * ce).epsilon(1e-14));
}

TEST_CASE("perfect predictions give zero loss") {
  const DenseArray image = DenseArray::matrix({{0.2}, {0.7}, {1.0}});
  CHECK(loss_recon(image, image) == 0.0);
  const DenseArray onehot = DenseArray::matrix({{1, 0, 0}, {0, 0, 1}, {0, 1, 0}});
  for (double gamma : {0.0, 1.0, 3.0}) {
    CHECK(loss_focal(onehot, onehot, gamma) == 0.0);
    CHECK(loss_inner(image, onehot, image, onehot, gamma) == 0.0);
  }
}

TEST_CASE("reconstruction loss is linear in the pixel weights") {
  Rng rng(5);
  DenseArray a(Shape{30, 2}), b(Shape{30, 2});
  for (double& v : a.values()) v = rng.uniform();
  for (double& v : b.values()) v = rng.uniform();
  std::vector<double> w1(30), w2(30), mix(30);
  for (std::size_t i = 0; i < 30; ++i) {
    w1[i] = rng.uniform();
    w2[i] = rng.uniform();
    mix[i] = 2.0 * w1[i] + 3.0 * w2[i];
  }
  const double l1 = loss_recon(a, b, w1), l2 = loss_recon(a, b, w2);
  CHECK(loss_recon(a, b, mix) == doctest::Approx(2.0 * l1 + 3.0 * l2).epsilon(1e-14));
  std::vector<double> ones(30, 1.0);
  CHECK(loss_recon(a, b, ones) == loss_recon(a, b));
  std::vector<double> zeros(30, 0.0);
  CHECK(loss_recon(a, b, zeros) == 0.0);
}

TEST_CASE("softmax rows are distributions and shift invariant") {
  const DenseArray z = DenseArray::matrix({{1, 2, 3}, {1000, 1001, 1002}, {-5, -5, -5}});
  const DenseArray p = softmax(z);
  for (std::size_t i = 0; i < 3; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < 3; ++k) s += p(i, k);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  }
  for (std::size_t k = 0; k < 3; ++k) CHECK(p(0, k) == doctest::Approx(p(1, k)).epsilon(1e-14));
  CHECK(p(2, 0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("argmax ties resolve to the smallest class") {
  const DenseArray s = DenseArray::matrix({{1, 3, 3}, {2, 2, 2}, {0, 0, 1}});
  CHECK(argmax_rows(s) == std::vector<std::uint8_t>{1, 0, 2});
}

TEST_CASE("focal loss rejects rows that are not one-hot") {
  const DenseArray probs = DenseArray::matrix({{0.5, 0.5}});
  CHECK_THROWS_AS(loss_focal(DenseArray::matrix({{1.0, 1.0}}), probs, 1.0), InputError);
  CHECK_THROWS_AS(loss_focal(DenseArray::matrix({{0.5, 0.5}}), probs, 1.0), InputError);
}

TEST_CASE("focal loss from logits matches the probability form") {
  Rng rng(8);
  DenseArray logits(Shape{25, 4});
  for (double& v : logits.values()) v = rng.uniform(-3.0, 3.0);
  const std::vector<std::uint8_t> labels = fixtures::random_labels(25, 4, 2);
  DenseArray d;
  const double a = focal_from_logits(logits, labels, 2.0, &d);
  CHECK(a == doctest::Approx(loss_focal(one_hot(labels, 4), softmax(logits), 2.0)).epsilon(1e-14));
  // gradient against central differences
  for (std::size_t i = 0; i < logits.size(); i += 3) {
    DenseArray up = logits, down = logits;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    const double fd =
        (focal_from_logits(up, labels, 2.0) - focal_from_logits(down, labels, 2.0)) / 2e-6;
    CHECK(gradcheck::relative_error(d[i], fd) < 1e-5);
  }
}

TEST_CASE("a vanishing true-class probability stays finite") {
  const DenseArray onehot = DenseArray::matrix({{1.0, 0.0}});
  const DenseArray probs = DenseArray::matrix({{0.0, 1.0}});
  CHECK(loss_focal(onehot, probs, 0.0) == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("gradients next to a leaky-ReLU kink") {
  // seed 7 puts a head pre-activation within 3e-4 of zero
  gradcheck::Problem p;
  p.model = fixtures::tiny_model(7);
  p.coords = fixtures::random_coords(16, 2, 107);
  p.image = fixtures::random_coords(16, 1, 207);
  p.labels = fixtures::random_labels(16, 3, 307);
  CHECK(gradcheck::worst_error(p, oracle::Kind::kFocal, 1.0) < 1e-4);
}
