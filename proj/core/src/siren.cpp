#include "inrseg/siren.hpp"

#include <cmath>
#include <string>

#include "inrseg/errors.hpp"

namespace inrseg {
namespace {

DenseArray uniform_array(Shape shape, double bound, Rng& rng) {
  DenseArray a(std::move(shape));
  for (double& v : a.values()) v = rng.uniform(-bound, bound);
  return a;
}

Linear make_linear(std::size_t in, std::size_t out, double bound, Rng& rng) {
  Linear l;
  l.weight = uniform_array(Shape{out, in}, bound, rng);
  l.bias = DenseArray(Shape{out});
  return l;
}

// x * Wᵀ + b
DenseArray affine(const DenseArray& x, const Linear& layer) {
  DenseArray z = matmul_nt(x, layer.weight);
  const std::size_t cols = z.cols();
  double* zd = z.data();
  const double* b = layer.bias.data();
  for (std::size_t r = 0; r < z.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) zd[r * cols + c] += b[c];
  return z;
}

// dW = dZᵀ x, db = column sums of dZ
Linear linear_grads(const DenseArray& dz, const DenseArray& x) {
  Linear g;
  g.weight = matmul_tn(dz, x);
  g.bias = reduce_sum(dz, 0);
  return g;
}

}  // namespace

void SirenConfig::validate() const {
  if (input_dim != 2 && input_dim != 3)
    throw InputError("SirenConfig: input_dim must be 2 or 3, got " + std::to_string(input_dim));
  if (output_dim < 1) throw InputError("SirenConfig: output_dim must be >= 1");
  if (num_layers < 2)
    throw InputError("SirenConfig: num_layers must be >= 2, got " + std::to_string(num_layers));
  if (hidden_width < 1) throw InputError("SirenConfig: hidden_width must be >= 1");
  if (num_classes < 2)
    throw InputError("SirenConfig: num_classes must be >= 2, got " + std::to_string(num_classes));
  if (head_hidden_width < 1) throw InputError("SirenConfig: head_hidden_width must be >= 1");
  if (!(omega0 > 0.0) || !std::isfinite(omega0))
    throw InputError("SirenConfig: omega0 must be positive");
  if (!(leaky_slope >= 0.0) || !std::isfinite(leaky_slope))
    throw InputError("SirenConfig: leaky_slope must be non-negative");
}

std::size_t SirenConfig::parameter_count() const {
  const std::size_t h = hidden_width;
  std::size_t n = h * input_dim + h;               // first sine layer
  n += (num_layers - 2) * (h * h + h);             // deeper sine layers
  n += output_dim * h + output_dim;                // reconstruction layer
  n += head_hidden_width * h + head_hidden_width;  // head hidden layer
  n += num_classes * head_hidden_width + num_classes;
  return n;
}

std::vector<DenseArray*> param_tensors(SirenModel& model, ParamScope scope) {
  std::vector<DenseArray*> out;
  if (scope != ParamScope::kHeadOnly) {
    for (auto& l : model.inr.layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
  }
  if (scope != ParamScope::kInrOnly) {
    out.push_back(&model.head.hidden.weight);
    out.push_back(&model.head.hidden.bias);
    out.push_back(&model.head.output.weight);
    out.push_back(&model.head.output.bias);
  }
  return out;
}

std::vector<const DenseArray*> param_tensors(const SirenModel& model, ParamScope scope) {
  std::vector<const DenseArray*> out;
  for (DenseArray* p : param_tensors(const_cast<SirenModel&>(model), scope)) out.push_back(p);
  return out;
}

std::vector<DenseArray*> grad_tensors(SirenGradients& grads, ParamScope scope) {
  std::vector<DenseArray*> out;
  if (scope != ParamScope::kHeadOnly) {
    for (auto& l : grads.inr.layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
  }
  if (scope != ParamScope::kInrOnly) {
    out.push_back(&grads.head.hidden.weight);
    out.push_back(&grads.head.hidden.bias);
    out.push_back(&grads.head.output.weight);
    out.push_back(&grads.head.output.bias);
  }
  return out;
}

std::vector<const DenseArray*> grad_tensors(const SirenGradients& grads, ParamScope scope) {
  std::vector<const DenseArray*> out;
  for (DenseArray* g : grad_tensors(const_cast<SirenGradients&>(grads), scope)) out.push_back(g);
  return out;
}

SirenGradients zero_gradients(const SirenModel& model) {
  SirenGradients g{model.inr, model.head};
  for (auto& l : g.inr.layers) {
    l.weight.fill(0.0);
    l.bias.fill(0.0);
  }
  for (Linear* l : {&g.head.hidden, &g.head.output}) {
    l->weight.fill(0.0);
    l->bias.fill(0.0);
  }
  return g;
}

SirenModel siren_init(const SirenConfig& config, Rng& rng) {
  config.validate();
  SirenModel m;
  m.config = config;
  const std::size_t h = config.hidden_width;
  const double d = static_cast<double>(config.input_dim);
  m.inr.layers.push_back(make_linear(config.input_dim, h, 1.0 / d, rng));
  const double deep_bound = std::sqrt(6.0 / static_cast<double>(h)) / config.omega0;
  for (std::size_t l = 1; l + 1 < config.num_layers; ++l)
    m.inr.layers.push_back(make_linear(h, h, deep_bound, rng));
  m.inr.layers.push_back(make_linear(h, config.output_dim, deep_bound, rng));

  const double hh = static_cast<double>(config.head_hidden_width);
  m.head.hidden = make_linear(h, config.head_hidden_width,
                              std::sqrt(6.0 / static_cast<double>(h)), rng);
  m.head.output = make_linear(config.head_hidden_width, config.num_classes, std::sqrt(6.0 / hh),
                              rng);
  return m;
}

DenseArray head_forward(const SegHeadParams& head, const DenseArray& features, double leaky_slope,
                        DenseArray* pre, DenseArray* act) {
  DenseArray z = affine(features, head.hidden);
  DenseArray a = z;
  for (double& v : a.values())
    if (v <= 0.0) v *= leaky_slope;
  DenseArray logits = affine(a, head.output);
  if (pre) *pre = std::move(z);
  if (act) *act = std::move(a);
  return logits;
}

ForwardResult forward(const SirenModel& model, const DenseArray& coords, bool with_head) {
  const SirenConfig& cfg = model.config;
  if (coords.rank() != 2 || coords.cols() != cfg.input_dim) {
    throw InputError("forward: coordinates must be n x " + std::to_string(cfg.input_dim) +
                     ", got " + shape_to_string(coords.shape()));
  }
  if (!all_finite(coords)) throw InputError("forward: non-finite input coordinates");

  ForwardResult out;
  ForwardTrace& tr = out.trace;
  tr.input = coords;
  const double w0 = cfg.omega0;
  const DenseArray* x = &tr.input;
  const std::size_t sine_layers = model.inr.layers.size() - 1;
  tr.activations.reserve(sine_layers);
  tr.slopes.reserve(sine_layers);
  for (std::size_t l = 0; l < sine_layers; ++l) {
    DenseArray z = affine(*x, model.inr.layers[l]);
    DenseArray slope(z.shape());
    double* zd = z.data();
    double* sd = slope.data();
    std::vector<double> u(zd, zd + z.size());
    for (double& v : u) v *= w0;
    sin_cos(u.data(), u.size(), zd, sd);
    for (std::size_t i = 0; i < z.size(); ++i) sd[i] *= w0;
    tr.activations.push_back(std::move(z));
    tr.slopes.push_back(std::move(slope));
    x = &tr.activations.back();
  }
  out.recon = affine(tr.penultimate(), model.inr.layers.back());
  if (with_head) {
    out.logits = head_forward(model.head, tr.penultimate(), cfg.leaky_slope, &tr.head_pre,
                              &tr.head_act);
    tr.has_head = true;
  }
  return out;
}

SegHeadParams head_backward(const SegHeadParams& head, const DenseArray& features,
                            const DenseArray& pre, const DenseArray& act, const DenseArray& d_logits,
                            double leaky_slope, DenseArray* d_features) {
  SegHeadParams g;
  g.output = linear_grads(d_logits, act);
  DenseArray d_act = matmul(d_logits, head.output.weight);
  for (std::size_t i = 0; i < d_act.size(); ++i)
    if (pre[i] <= 0.0) d_act[i] *= leaky_slope;
  g.hidden = linear_grads(d_act, features);
  if (d_features) *d_features = matmul(d_act, head.hidden.weight);
  return g;
}

SirenGradients backward(const SirenModel& model, const ForwardTrace& trace,
                        const DenseArray& d_recon, const DenseArray* d_logits) {
  const SirenConfig& cfg = model.config;
  const std::size_t n = trace.rows();
  if (d_recon.rank() != 2 || d_recon.rows() != n || d_recon.cols() != cfg.output_dim) {
    throw DimensionError("backward: reconstruction gradient " + shape_to_string(d_recon.shape()) +
                         " does not match trace of " + std::to_string(n) + " rows");
  }
  if (d_logits && (!trace.has_head || d_logits->rank() != 2 || d_logits->rows() != n ||
                   d_logits->cols() != cfg.num_classes)) {
    throw DimensionError("backward: logit gradient does not match the forward trace");
  }

  SirenGradients g;
  const std::size_t L = model.inr.layers.size();
  g.inr.layers.resize(L);
  const DenseArray& feats = trace.penultimate();
  g.inr.layers[L - 1] = linear_grads(d_recon, feats);
  DenseArray d_act = matmul(d_recon, model.inr.layers[L - 1].weight);

  if (d_logits) {
    DenseArray via_head;
    g.head = head_backward(model.head, feats, trace.head_pre, trace.head_act, *d_logits,
                           cfg.leaky_slope, &via_head);
    axpy_inplace(d_act, 1.0, via_head);
  } else {
    g.head = SegHeadParams{{DenseArray(model.head.hidden.weight.shape()),
                            DenseArray(model.head.hidden.bias.shape())},
                           {DenseArray(model.head.output.weight.shape()),
                            DenseArray(model.head.output.bias.shape())}};
  }

  for (std::size_t l = L - 1; l-- > 0;) {
    // d_act is the gradient w.r.t. activations[l]; turn it into dZ in place.
    const DenseArray& slope = trace.slopes[l];
    for (std::size_t i = 0; i < d_act.size(); ++i) d_act[i] *= slope[i];
    const DenseArray& x = l == 0 ? trace.input : trace.activations[l - 1];
    g.inr.layers[l] = linear_grads(d_act, x);
    if (l > 0) d_act = matmul(d_act, model.inr.layers[l].weight);
  }
  return g;
}

}  // namespace inrseg
