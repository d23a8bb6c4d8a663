#pragma once

#include <cstddef>
#include <vector>

#include "inrseg/rng.hpp"
#include "inrseg/tensor.hpp"

namespace inrseg {

struct SirenConfig {
  std::size_t input_dim = 2;    // d, coordinate dimensionality
  std::size_t output_dim = 1;   // D, image channels
  std::size_t num_layers = 6;   // L, linear layers in the INR (L-1 sine layers + linear output)
  std::size_t hidden_width = 128;
  double omega0 = 30.0;
  std::size_t num_classes = 5;
  std::size_t head_hidden_width = 128;
  double leaky_slope = 0.01;

  // Throws InputError unless L >= 2, h >= 1, C >= 2, omega0 > 0 and d in {2, 3}.
  void validate() const;
  // Trainable scalars in the INR plus the segmentation head.
  std::size_t parameter_count() const;

  friend bool operator==(const SirenConfig&, const SirenConfig&) = default;
};

// Fully connected layer; weight is (out x in), applied as x * Wᵀ + b on row batches.
struct Linear {
  DenseArray weight;
  DenseArray bias;

  friend bool operator==(const Linear&, const Linear&) = default;
};

// θ: layers[0..L-2] are sine-activated, layers[L-1] is the linear reconstruction layer.
struct InrParams {
  std::vector<Linear> layers;

  friend bool operator==(const InrParams&, const InrParams&) = default;
};

// φ: leaky-ReLU hidden layer followed by a linear layer with C outputs.
struct SegHeadParams {
  Linear hidden;
  Linear output;

  friend bool operator==(const SegHeadParams&, const SegHeadParams&) = default;
};

struct SirenModel {
  SirenConfig config;
  InrParams inr;
  SegHeadParams head;

  friend bool operator==(const SirenModel&, const SirenModel&) = default;
};

// Same layout as the parameters they belong to.
struct SirenGradients {
  InrParams inr;
  SegHeadParams head;
};

enum class ParamScope { kAll, kInrOnly, kHeadOnly };

std::vector<DenseArray*> param_tensors(SirenModel& model, ParamScope scope = ParamScope::kAll);
std::vector<const DenseArray*> param_tensors(const SirenModel& model,
                                             ParamScope scope = ParamScope::kAll);
std::vector<DenseArray*> grad_tensors(SirenGradients& grads, ParamScope scope = ParamScope::kAll);
std::vector<const DenseArray*> grad_tensors(const SirenGradients& grads,
                                            ParamScope scope = ParamScope::kAll);
SirenGradients zero_gradients(const SirenModel& model);

/// SIREN initialization: first-layer weights ~ U(-1/d, 1/d), deeper INR weights
/// ~ U(-sqrt(6/fan_in)/omega0, +sqrt(6/fan_in)/omega0), head weights
/// ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)); all biases zero. Draw order is layer
/// by layer, weights in row-major order, INR before head.
SirenModel siren_init(const SirenConfig& config, Rng& rng);

struct ForwardTrace {
  DenseArray input;                     // n x d
  std::vector<DenseArray> activations;  // sin(omega0 * z) per sine layer, n x h
  std::vector<DenseArray> slopes;       // omega0 * cos(omega0 * z) per sine layer
  DenseArray head_pre;                  // n x head_hidden (empty when the head was skipped)
  DenseArray head_act;
  bool has_head = false;

  // f^{L-1}(x), n x h
  const DenseArray& penultimate() const { return activations.back(); }
  std::size_t rows() const { return input.rows(); }
};

struct ForwardResult {
  DenseArray recon;   // n x D
  DenseArray logits;  // n x C (empty when the head was skipped)
  ForwardTrace trace;
};

/// Evaluates the INR and, when `with_head`, the segmentation head on the
/// penultimate features. Rows are independent coordinates.
/// Throws InputError on non-finite or mis-shaped coordinates.
ForwardResult forward(const SirenModel& model, const DenseArray& coords, bool with_head = true);

// Logits from features alone (frozen-head decoding of harvested features).
DenseArray head_forward(const SegHeadParams& head, const DenseArray& features, double leaky_slope,
                        DenseArray* pre = nullptr, DenseArray* act = nullptr);

/// Chain rule through the head and the INR given the loss gradients with respect
/// to the reconstruction (n x D) and, optionally, the logits (n x C).
/// Head gradients are zero when `d_logits` is null.
SirenGradients backward(const SirenModel& model, const ForwardTrace& trace,
                        const DenseArray& d_recon, const DenseArray* d_logits);

// Head gradients given d_logits; optionally also the gradient w.r.t. the input features.
SegHeadParams head_backward(const SegHeadParams& head, const DenseArray& features,
                            const DenseArray& pre, const DenseArray& act, const DenseArray& d_logits,
                            double leaky_slope, DenseArray* d_features = nullptr);

}  // namespace inrseg
