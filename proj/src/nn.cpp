#include "condmon/nn.hpp"

#include <cmath>
#include <string>

namespace condmon::nn {

Vec dense_forward(const DenseLayer& layer, const Vec& input) {
  if (input.size() != layer.in_dim()) {
    throw ShapeError("dense_forward: input length " + std::to_string(input.size()) +
                     " != in_dim " + std::to_string(layer.in_dim()));
  }
  Vec out(layer.out_dim());
  for (std::size_t i = 0; i < layer.out_dim(); ++i) {
    double acc = layer.b[i];
    const double* row = &layer.w.a[i * layer.w.cols];
    for (std::size_t j = 0; j < layer.in_dim(); ++j) acc += row[j] * input[j];
    out[i] = acc;
  }
  return out;
}

Vec dense_backward(const DenseLayer& layer, const Vec& input, const Vec& dout,
                   DenseLayer& grads) {
  if (dout.size() != layer.out_dim() || input.size() != layer.in_dim() ||
      !grads.w.same_shape(layer.w)) {
    throw ShapeError("dense_backward: shape mismatch");
  }
  for (std::size_t i = 0; i < layer.out_dim(); ++i) {
    grads.b[i] += dout[i];
    double* grow = &grads.w.a[i * grads.w.cols];
    for (std::size_t j = 0; j < layer.in_dim(); ++j) grow[j] += dout[i] * input[j];
  }
  Vec dinput(layer.in_dim(), 0.0);
  for (std::size_t i = 0; i < layer.out_dim(); ++i) {
    const double* row = &layer.w.a[i * layer.w.cols];
    for (std::size_t j = 0; j < layer.in_dim(); ++j) dinput[j] += row[j] * dout[i];
  }
  return dinput;
}

Vec relu(Vec x) {
  for (double& v : x) v = v > 0.0 ? v : 0.0;
  return x;
}

Vec activation_backward(const Vec& pre, const Vec& dact, Activation act) {
  if (pre.size() != dact.size()) throw ShapeError("activation_backward: shape mismatch");
  if (act == Activation::Identity) return dact;
  Vec dpre(dact.size());
  for (std::size_t i = 0; i < dact.size(); ++i) dpre[i] = pre[i] > 0.0 ? dact[i] : 0.0;
  return dpre;
}

void MlpSpec::validate() const {
  if (sizes.size() < 2) throw ShapeError("MlpSpec: needs at least two sizes");
  if (activations.size() != sizes.size() - 1) {
    throw ShapeError("MlpSpec: one activation per layer required");
  }
  for (std::size_t s : sizes) {
    if (s == 0) throw ShapeError("MlpSpec: zero-width layer");
  }
}

MlpSpec MlpSpec::ladder(std::vector<std::size_t> sizes, Activation final_act) {
  MlpSpec spec;
  spec.sizes = std::move(sizes);
  spec.activations.assign(spec.sizes.size() - 1, Activation::Relu);
  spec.activations.back() = final_act;
  spec.validate();
  return spec;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w.a.size() + l.b.size();
  return n;
}

Mlp make_mlp(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  Mlp mlp;
  mlp.spec = spec;
  for (std::size_t l = 0; l + 1 < spec.sizes.size(); ++l) {
    DenseLayer layer(spec.sizes[l + 1], spec.sizes[l]);
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in_dim()));
    for (double& w : layer.w.a) w = rng.uniform(-limit, limit);
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

Mlp make_grads_like(const Mlp& mlp) {
  Mlp g;
  g.spec = mlp.spec;
  for (const auto& l : mlp.layers) g.layers.emplace_back(l.out_dim(), l.in_dim());
  return g;
}

MlpTrace mlp_forward(const Mlp& mlp, const Vec& input) {
  if (mlp.layers.size() != mlp.spec.layer_count()) {
    throw ShapeError("mlp_forward: layer list does not match spec");
  }
  MlpTrace trace;
  trace.act.push_back(input);
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    Vec pre = dense_forward(mlp.layers[l], trace.act.back());
    Vec act = mlp.spec.activations[l] == Activation::Relu ? relu(pre) : pre;
    trace.pre.push_back(std::move(pre));
    trace.act.push_back(std::move(act));
  }
  return trace;
}

Vec mlp_backward(const Mlp& mlp, const MlpTrace& trace, const Vec& output_gradient, Mlp& grads) {
  if (trace.pre.size() != mlp.layers.size() || trace.act.size() != mlp.layers.size() + 1) {
    throw ShapeError("mlp_backward: trace does not match net");
  }
  Vec d = output_gradient;
  for (std::size_t l = mlp.layers.size(); l-- > 0;) {
    d = activation_backward(trace.pre[l], d, mlp.spec.activations[l]);
    d = dense_backward(mlp.layers[l], trace.act[l], d, grads.layers[l]);
  }
  return d;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("adam_step: shape mismatch");
  }
  if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0 ||
      cfg.lr <= 0.0) {
    throw ModelError("adam_step: invalid hyperparameters");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw ModelError("adam_step: non-finite gradient");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

Vec finite_difference_gradient(const std::function<double(const Vec&)>& loss, const Vec& params,
                               double h) {
  Vec grad(params.size());
  Vec p = params;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + h;
    const double up = loss(p);
    p[i] = orig - h;
    const double down = loss(p);
    p[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

void flatten_mlp(const Mlp& mlp, Vec& out) {
  for (const auto& l : mlp.layers) {
    out.insert(out.end(), l.w.a.begin(), l.w.a.end());
    out.insert(out.end(), l.b.begin(), l.b.end());
  }
}

void unflatten_mlp(std::span<const double> flat, Mlp& mlp) {
  std::size_t off = 0;
  for (auto& l : mlp.layers) {
    for (double& w : l.w.a) w = flat[off++];
    for (double& b : l.b) b = flat[off++];
  }
  if (off != flat.size()) throw ShapeError("unflatten_mlp: size mismatch");
}

}  // namespace condmon::nn
