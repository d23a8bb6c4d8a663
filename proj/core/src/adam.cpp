#include "inrseg/adam.hpp"

#include <cmath>
#include <string>

#include "inrseg/errors.hpp"

namespace inrseg {

void adam_step(std::span<DenseArray* const> params, std::span<const DenseArray* const> grads,
               AdamState& state) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i]->shape()) {
      throw DimensionError("adam_step: parameter " + std::to_string(i) + " has shape " +
                           shape_to_string(params[i]->shape()) + ", gradient " +
                           shape_to_string(grads[i]->shape()));
    }
  }
  if (state.m.empty()) {
    for (const DenseArray* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  }
  if (state.m.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state tracks " + std::to_string(state.m.size()) +
                         " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].shape() != params[i]->shape())
      throw DimensionError("adam_step: optimizer state shape mismatch at tensor " +
                           std::to_string(i));
  }

  const AdamHyper& h = state.hyper;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i]->data();
    const double* g = grads[i]->data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    for (std::size_t k = 0; k < params[i]->size(); ++k) {
      m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * g[k];
      v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
}

void adam_step(SirenModel& model, const SirenGradients& grads, AdamState& state,
               ParamScope scope) {
  auto params = param_tensors(model, scope);
  auto g = grad_tensors(grads, scope);
  adam_step(params, g, state);
}

}  // namespace inrseg
