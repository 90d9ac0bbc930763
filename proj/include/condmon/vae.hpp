#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "condmon/data.hpp"
#include "condmon/nn.hpp"

namespace condmon::vae {

inline constexpr std::size_t kInputDim = data::kWindowLen;  // 256
inline constexpr std::size_t kLatentDim = 5;

struct LatentCode {
  Vec mu;      // length kLatentDim
  Vec logvar;  // natural log of the per-dimension variance
};

// Encoder trunk 256-128-32-8 (relu), two affine heads 8-5 for mu/logvar,
// decoder 5-8-32-128-256 with an identity output layer (signals are signed).
struct VaeParams {
  nn::Mlp encoder_trunk;
  nn::DenseLayer mu_head;
  nn::DenseLayer logvar_head;
  nn::Mlp decoder;

  std::size_t latent_dim() const { return mu_head.out_dim(); }
  std::size_t input_dim() const { return encoder_trunk.in_dim(); }
  std::size_t param_count() const;
  void validate() const;
};

struct VaeArch {
  std::vector<std::size_t> trunk_sizes{256, 128, 32, 8};
  std::size_t latent = kLatentDim;

  std::vector<std::size_t> decoder_sizes() const;
};

VaeParams make_vae(const VaeArch& arch, std::uint64_t seed);

struct TrainConfig {
  std::size_t epochs = 500;
  double learning_rate = 5e-4;
  double beta = 20.0;
  double c = 1.0;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  double total = 0.0;
  double recon = 0.0;
  double kl = 0.0;
};

using TrainHistory = std::vector<EpochRecord>;

LatentCode encode(const VaeParams& params, const Vec& x);
Vec reparameterize(const LatentCode& code, const Vec& eps);
Vec decode(const VaeParams& params, const Vec& z);

// 0.5 * sum(mu^2 + exp(logvar) - 1 - logvar); >= 0, 0 iff q = p.
double kl_divergence(const LatentCode& code);

struct LossParts {
  double total = 0.0;
  double recon = 0.0;
  double kl = 0.0;
};

// total = ||x - xhat||^2 / (2c) + beta * KL. Minimization form of the
// paper-style argmax objective.
LossParts vae_loss(const Vec& x, const Vec& xhat, const LatentCode& code, double beta, double c);

struct VaeGrads {
  nn::Mlp encoder_trunk;
  nn::DenseLayer mu_head;
  nn::DenseLayer logvar_head;
  nn::Mlp decoder;
};

VaeGrads make_grads_like(const VaeParams& params);
void zero_grads(VaeGrads& grads);

// Forward + loss + full parameter gradient for one sample with eps fixed.
// Gradients accumulate into `grads`.
LossParts vae_backward(const VaeParams& params, const Vec& x, const Vec& eps, double beta,
                       double c, VaeGrads& grads);

// Fixed serialization order: trunk, mu head, logvar head, decoder.
void flatten_params(const VaeParams& params, Vec& out);
void unflatten_params(std::span<const double> flat, VaeParams& params);
void flatten_grads(const VaeGrads& grads, Vec& out);

// Trains on normal + degraded windows only (severe or unlabeled labels are
// rejected). Windows must already be normalized. Fully reproducible from
// config.seed.
std::pair<VaeParams, TrainHistory> train(const std::vector<data::SignalWindow>& windows,
                                         const TrainConfig& config);

// Checkpoint: versioned JSON with architecture, parameters, train config and
// the normalization stats the parameters were trained under.
struct Checkpoint {
  VaeParams params;
  TrainConfig config;
  data::NormStats stats;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace condmon::vae
