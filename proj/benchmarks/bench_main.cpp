#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "inrseg/grid.hpp"
#include "inrseg/losses.hpp"
#include "inrseg/meta_learning.hpp"
#include "inrseg/rng.hpp"
#include "inrseg/siren.hpp"
#include "inrseg/synthetic.hpp"
#include "inrseg/tensor.hpp"

namespace {
using namespace inrseg;

DenseArray random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  DenseArray a(Shape{rows, cols});
  for (double& v : a.values()) v = rng.uniform(-1.0, 1.0);
  return a;
}

SirenConfig bench_config(std::size_t layers, std::size_t width) {
  SirenConfig c;
  c.num_layers = layers;
  c.hidden_width = width;
  c.head_hidden_width = width;
  c.num_classes = 4;
  return c;
}

void BM_MatmulNt(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  const DenseArray x = random_matrix(4096, h, 1), w = random_matrix(h, h, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul_nt(x, w));
  state.SetItemsProcessed(state.iterations() * 4096 * static_cast<std::int64_t>(h * h));
}
BENCHMARK(BM_MatmulNt)->Arg(64)->Arg(128)->Arg(256);

void BM_SinCos(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n), s(n), c(n);
  Rng rng(3);
  for (double& v : x) v = rng.uniform(-60.0, 60.0);
  for (auto _ : state) {
    sin_cos(x.data(), n, s.data(), c.data());
    benchmark::DoNotOptimize(s.data());
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_SinCos)->Arg(1 << 16);

void BM_StdSinCos(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n), s(n), c(n);
  Rng rng(3);
  for (double& v : x) v = rng.uniform(-60.0, 60.0);
  for (auto _ : state) {
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::sin(x[i]);
      c[i] = std::cos(x[i]);
    }
    benchmark::DoNotOptimize(s.data());
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_StdSinCos)->Arg(1 << 16);

void BM_Forward(benchmark::State& state) {
  Rng rng(4);
  const SirenModel m = siren_init(bench_config(4, static_cast<std::size_t>(state.range(0))), rng);
  const DenseArray coords = make_grid(Shape{64, 64}).coords;
  for (auto _ : state) benchmark::DoNotOptimize(forward(m, coords, true));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_InnerObjective(benchmark::State& state) {
  Rng rng(5);
  const SirenModel m = siren_init(bench_config(4, static_cast<std::size_t>(state.range(0))), rng);
  SynthSpec spec;
  const Sample s = generate_synthetic(spec, 1, 0, 0).front();
  const DenseArray coords = make_grid(s.extents).coords;
  const DenseArray image = s.targets(), onehot = s.one_hot();
  LossSpec loss;
  loss.kind = LossKind::kInner;
  loss.gamma = 1.0;
  loss.targets.image = &image;
  loss.targets.onehot = &onehot;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_objective(m, coords, loss));
}
BENCHMARK(BM_InnerObjective)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ReconFit10(benchmark::State& state) {
  Rng rng(6);
  const SirenModel m = siren_init(bench_config(4, 64), rng);
  SynthSpec spec;
  const Sample s = generate_synthetic(spec, 1, 0, 0).front();
  const DenseArray coords = make_grid(s.extents).coords;
  const DenseArray image = s.targets();
  for (auto _ : state) benchmark::DoNotOptimize(fit_reconstruction(m, coords, image, 10, 1e-4));
}
BENCHMARK(BM_ReconFit10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
