#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "inrseg/siren.hpp"
#include "inrseg/tensor.hpp"

namespace inrseg {

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  std::vector<DenseArray> m;  // first moments, one per parameter tensor
  std::vector<DenseArray> v;  // second moments
  std::uint64_t t = 0;

  explicit AdamState(AdamHyper h = {}) : hyper(h) {}
};

/// One Adam update with bias correction, in place. The moment buffers are
/// created on the first call; later calls require the same tensor shapes.
/// Single writer on both `params` and `state`.
void adam_step(std::span<DenseArray* const> params, std::span<const DenseArray* const> grads,
               AdamState& state);

// Applies `grads` restricted to `scope` to the matching tensors of `model`.
void adam_step(SirenModel& model, const SirenGradients& grads, AdamState& state,
               ParamScope scope = ParamScope::kAll);

}  // namespace inrseg
