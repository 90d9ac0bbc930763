#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "condmon/linalg.hpp"
#include "condmon/rng.hpp"

namespace condmon::nn {

enum class Activation { Relu, Identity };

struct DenseLayer {
  Matrix w;  // out_dim x in_dim
  Vec b;     // out_dim

  DenseLayer() = default;
  DenseLayer(std::size_t out_dim, std::size_t in_dim) : w(out_dim, in_dim), b(out_dim, 0.0) {}

  std::size_t in_dim() const { return w.cols; }
  std::size_t out_dim() const { return w.rows; }
};

// output[i] = sum_j w[i][j] * input[j] + b[i]
Vec dense_forward(const DenseLayer& layer, const Vec& input);

// Accumulates into grads and returns dL/dinput.
Vec dense_backward(const DenseLayer& layer, const Vec& input, const Vec& dout, DenseLayer& grads);

Vec relu(Vec x);

// Derivative w.r.t. the pre-activation; relu subgradient at 0 is 0.
Vec activation_backward(const Vec& pre, const Vec& dact, Activation act);

struct MlpSpec {
  std::vector<std::size_t> sizes;           // at least two entries
  std::vector<Activation> activations;      // one per layer = sizes.size() - 1

  std::size_t layer_count() const { return activations.size(); }
  void validate() const;

  // All hidden layers relu, final layer as given.
  static MlpSpec ladder(std::vector<std::size_t> sizes, Activation final_act);
};

struct Mlp {
  MlpSpec spec;
  std::vector<DenseLayer> layers;

  std::size_t in_dim() const { return spec.sizes.front(); }
  std::size_t out_dim() const { return spec.sizes.back(); }
  std::size_t param_count() const;
};

// He-uniform weights scaled by fan-in, zero biases.
Mlp make_mlp(const MlpSpec& spec, Rng& rng);

// Gradient accumulator with the same layout as the net.
Mlp make_grads_like(const Mlp& mlp);

struct MlpTrace {
  std::vector<Vec> pre;  // pre-activation of layer l
  std::vector<Vec> act;  // act[0] = input, act[l + 1] = activation of layer l

  const Vec& output() const { return act.back(); }
};

MlpTrace mlp_forward(const Mlp& mlp, const Vec& input);

// Accumulates parameter gradients into `grads` and returns dL/dinput.
// `trace` must come from mlp_forward on the same parameters.
Vec mlp_backward(const Mlp& mlp, const MlpTrace& trace, const Vec& output_gradient, Mlp& grads);

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vec m;
  Vec v;
  std::int64_t t = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// Standard Adam with bias correction; t increments by exactly one.
// Non-finite gradient entries are rejected.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg);

// Central differences (f(p+h) - f(p-h)) / 2h per coordinate. Test oracle.
Vec finite_difference_gradient(const std::function<double(const Vec&)>& loss, const Vec& params,
                               double h = 1e-4);

// Flatten/unflatten in layer order: w row-major then b, per layer.
void flatten_mlp(const Mlp& mlp, Vec& out);
void unflatten_mlp(std::span<const double> flat, Mlp& mlp);

}  // namespace condmon::nn
