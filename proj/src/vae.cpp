#include "condmon/vae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include <json.hpp>

#include "condmon/errors.hpp"

namespace condmon::vae {

using nlohmann::json;

namespace {
// Stream tags for seed derivation.
constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kShuffleStream = 0x5480;
constexpr std::uint64_t kEpsStream = 0xE425;
}  // namespace

std::size_t VaeParams::param_count() const {
  return encoder_trunk.param_count() + decoder.param_count() + mu_head.w.a.size() +
         mu_head.b.size() + logvar_head.w.a.size() + logvar_head.b.size();
}

void VaeParams::validate() const {
  const std::size_t trunk_out = encoder_trunk.out_dim();
  if (mu_head.in_dim() != trunk_out || logvar_head.in_dim() != trunk_out) {
    throw ShapeError("vae: head input does not match trunk output");
  }
  if (mu_head.out_dim() != logvar_head.out_dim()) {
    throw ShapeError("vae: mu/logvar heads disagree on latent dimension");
  }
  if (decoder.in_dim() != mu_head.out_dim()) {
    throw ShapeError("vae: decoder input does not match latent dimension");
  }
  if (decoder.out_dim() != encoder_trunk.in_dim()) {
    throw ShapeError("vae: decoder output does not match encoder input");
  }
}

std::vector<std::size_t> VaeArch::decoder_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.push_back(latent);
  for (auto it = trunk_sizes.rbegin(); it != trunk_sizes.rend(); ++it) sizes.push_back(*it);
  return sizes;
}

VaeParams make_vae(const VaeArch& arch, std::uint64_t seed) {
  if (arch.trunk_sizes.size() < 2) throw ShapeError("vae: trunk needs at least two sizes");
  if (arch.latent == 0) throw ShapeError("vae: latent dimension must be positive");
  Rng rng(derive_seed(seed, kInitStream));

  VaeParams p;
  p.encoder_trunk = nn::make_mlp(nn::MlpSpec::ladder(arch.trunk_sizes, nn::Activation::Relu),
                                 rng);
  const std::size_t trunk_out = arch.trunk_sizes.back();
  const double head_limit = std::sqrt(6.0 / static_cast<double>(trunk_out));
  p.mu_head = nn::DenseLayer(arch.latent, trunk_out);
  for (double& w : p.mu_head.w.a) w = rng.uniform(-head_limit, head_limit);
  p.logvar_head = nn::DenseLayer(arch.latent, trunk_out);
  for (double& w : p.logvar_head.w.a) w = rng.uniform(-head_limit, head_limit);
  p.decoder =
      nn::make_mlp(nn::MlpSpec::ladder(arch.decoder_sizes(), nn::Activation::Identity), rng);
  p.validate();
  return p;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ArgError("train config: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ArgError("train config: learning_rate must be > 0");
  if (beta < 0.0) throw ArgError("train config: beta must be >= 0");
  if (!(c > 0.0)) throw ArgError("train config: c must be > 0");
  if (batch_size < 1) throw ArgError("train config: batch_size must be >= 1");
}

LatentCode encode(const VaeParams& params, const Vec& x) {
  if (x.size() != params.input_dim()) {
    throw ShapeError("encode: input length " + std::to_string(x.size()) + " != " +
                     std::to_string(params.input_dim()));
  }
  if (!all_finite(x)) throw DataError("encode: non-finite input");
  const nn::MlpTrace trace = nn::mlp_forward(params.encoder_trunk, x);
  LatentCode code;
  code.mu = nn::dense_forward(params.mu_head, trace.output());
  code.logvar = nn::dense_forward(params.logvar_head, trace.output());
  return code;
}

Vec reparameterize(const LatentCode& code, const Vec& eps) {
  if (eps.size() != code.mu.size()) throw ShapeError("reparameterize: eps length mismatch");
  Vec z(code.mu.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = code.mu[i] + std::exp(0.5 * code.logvar[i]) * eps[i];
  }
  return z;
}

Vec decode(const VaeParams& params, const Vec& z) {
  if (z.size() != params.decoder.in_dim()) throw ShapeError("decode: latent length mismatch");
  return nn::mlp_forward(params.decoder, z).output();
}

double kl_divergence(const LatentCode& code) {
  if (code.mu.size() != code.logvar.size()) throw ShapeError("kl: mu/logvar length mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < code.mu.size(); ++i) {
    kl += code.mu[i] * code.mu[i] + std::exp(code.logvar[i]) - 1.0 - code.logvar[i];
  }
  return 0.5 * kl;
}

LossParts vae_loss(const Vec& x, const Vec& xhat, const LatentCode& code, double beta,
                   double c) {
  if (x.size() != xhat.size()) throw ShapeError("vae_loss: x/xhat length mismatch");
  if (beta < 0.0 || !(c > 0.0)) throw ModelError("vae_loss: invalid beta or c");
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sq += (x[i] - xhat[i]) * (x[i] - xhat[i]);
  LossParts parts;
  parts.recon = sq / (2.0 * c);
  parts.kl = kl_divergence(code);
  parts.total = parts.recon + beta * parts.kl;
  return parts;
}

VaeGrads make_grads_like(const VaeParams& params) {
  VaeGrads g;
  g.encoder_trunk = nn::make_grads_like(params.encoder_trunk);
  g.mu_head = nn::DenseLayer(params.mu_head.out_dim(), params.mu_head.in_dim());
  g.logvar_head = nn::DenseLayer(params.logvar_head.out_dim(), params.logvar_head.in_dim());
  g.decoder = nn::make_grads_like(params.decoder);
  return g;
}

void zero_grads(VaeGrads& grads) {
  auto zero_mlp = [](nn::Mlp& m) {
    for (auto& l : m.layers) {
      std::fill(l.w.a.begin(), l.w.a.end(), 0.0);
      std::fill(l.b.begin(), l.b.end(), 0.0);
    }
  };
  zero_mlp(grads.encoder_trunk);
  zero_mlp(grads.decoder);
  std::fill(grads.mu_head.w.a.begin(), grads.mu_head.w.a.end(), 0.0);
  std::fill(grads.mu_head.b.begin(), grads.mu_head.b.end(), 0.0);
  std::fill(grads.logvar_head.w.a.begin(), grads.logvar_head.w.a.end(), 0.0);
  std::fill(grads.logvar_head.b.begin(), grads.logvar_head.b.end(), 0.0);
}

LossParts vae_backward(const VaeParams& params, const Vec& x, const Vec& eps, double beta,
                       double c, VaeGrads& grads) {
  const std::size_t latent = params.latent_dim();
  if (eps.size() != latent) throw ShapeError("vae_backward: eps length mismatch");

  // Forward with intermediates kept.
  const nn::MlpTrace trunk_trace = nn::mlp_forward(params.encoder_trunk, x);
  const Vec& trunk_out = trunk_trace.output();
  LatentCode code;
  code.mu = nn::dense_forward(params.mu_head, trunk_out);
  code.logvar = nn::dense_forward(params.logvar_head, trunk_out);
  Vec sigma(latent);
  for (std::size_t i = 0; i < latent; ++i) sigma[i] = std::exp(0.5 * code.logvar[i]);
  Vec z(latent);
  for (std::size_t i = 0; i < latent; ++i) z[i] = code.mu[i] + sigma[i] * eps[i];
  const nn::MlpTrace dec_trace = nn::mlp_forward(params.decoder, z);
  const Vec& xhat = dec_trace.output();

  const LossParts parts = vae_loss(x, xhat, code, beta, c);

  // Reconstruction path.
  Vec dxhat(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) dxhat[i] = (xhat[i] - x[i]) / c;
  const Vec dz = nn::mlp_backward(params.decoder, dec_trace, dxhat, grads.decoder);

  // Reparameterization + KL path.
  Vec dmu(latent);
  Vec dlogvar(latent);
  for (std::size_t i = 0; i < latent; ++i) {
    dmu[i] = dz[i] + beta * code.mu[i];
    dlogvar[i] = dz[i] * 0.5 * sigma[i] * eps[i] +
                 beta * 0.5 * (std::exp(code.logvar[i]) - 1.0);
  }
  Vec dtrunk = nn::dense_backward(params.mu_head, trunk_out, dmu, grads.mu_head);
  const Vec dtrunk_lv =
      nn::dense_backward(params.logvar_head, trunk_out, dlogvar, grads.logvar_head);
  for (std::size_t i = 0; i < dtrunk.size(); ++i) dtrunk[i] += dtrunk_lv[i];
  nn::mlp_backward(params.encoder_trunk, trunk_trace, dtrunk, grads.encoder_trunk);

  return parts;
}

void flatten_params(const VaeParams& params, Vec& out) {
  out.clear();
  out.reserve(params.param_count());
  nn::flatten_mlp(params.encoder_trunk, out);
  out.insert(out.end(), params.mu_head.w.a.begin(), params.mu_head.w.a.end());
  out.insert(out.end(), params.mu_head.b.begin(), params.mu_head.b.end());
  out.insert(out.end(), params.logvar_head.w.a.begin(), params.logvar_head.w.a.end());
  out.insert(out.end(), params.logvar_head.b.begin(), params.logvar_head.b.end());
  nn::flatten_mlp(params.decoder, out);
}

namespace {

std::size_t mlp_param_count(const nn::Mlp& m) {
  std::size_t n = 0;
  for (const auto& l : m.layers) n += l.w.a.size() + l.b.size();
  return n;
}

std::size_t take_dense(std::span<const double> flat, std::size_t off, nn::DenseLayer& layer) {
  for (double& w : layer.w.a) w = flat[off++];
  for (double& b : layer.b) b = flat[off++];
  return off;
}

}  // namespace

void unflatten_params(std::span<const double> flat, VaeParams& params) {
  if (flat.size() != params.param_count()) throw ShapeError("unflatten_params: size mismatch");
  std::size_t off = 0;
  const std::size_t trunk_n = mlp_param_count(params.encoder_trunk);
  nn::unflatten_mlp(flat.subspan(off, trunk_n), params.encoder_trunk);
  off += trunk_n;
  off = take_dense(flat, off, params.mu_head);
  off = take_dense(flat, off, params.logvar_head);
  nn::unflatten_mlp(flat.subspan(off), params.decoder);
}

void flatten_grads(const VaeGrads& grads, Vec& out) {
  out.clear();
  nn::flatten_mlp(grads.encoder_trunk, out);
  out.insert(out.end(), grads.mu_head.w.a.begin(), grads.mu_head.w.a.end());
  out.insert(out.end(), grads.mu_head.b.begin(), grads.mu_head.b.end());
  out.insert(out.end(), grads.logvar_head.w.a.begin(), grads.logvar_head.w.a.end());
  out.insert(out.end(), grads.logvar_head.b.begin(), grads.logvar_head.b.end());
  nn::flatten_mlp(grads.decoder, out);
}

std::pair<VaeParams, TrainHistory> train(const std::vector<data::SignalWindow>& windows,
                                         const TrainConfig& config) {
  config.validate();
  if (windows.empty()) throw DataError("train: empty dataset");
  for (const auto& w : windows) {
    if (w.label != data::Condition::Normal && w.label != data::Condition::Degraded) {
      throw DataError("train: dataset contaminated with '" + std::string(to_string(w.label)) +
                      "' window (only normal and degraded are allowed)");
    }
    if (w.values.size() != kInputDim) throw ShapeError("train: window length != 256");
    if (!all_finite(w.values)) throw DataError("train: non-finite window");
  }

  VaeParams params = make_vae(VaeArch{}, config.seed);
  nn::AdamState adam(params.param_count());
  nn::AdamConfig adam_cfg;
  adam_cfg.lr = config.learning_rate;

  VaeGrads grads = make_grads_like(params);
  Vec flat_params;
  Vec flat_grads;
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainHistory history;
  history.reserve(config.epochs);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, kShuffleStream, epoch));
    shuffle_rng.shuffle(order);
    Rng eps_rng(derive_seed(config.seed, kEpsStream, epoch));

    EpochRecord record;
    Vec eps(kLatentDim);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const auto batch_n = static_cast<double>(end - start);
      zero_grads(grads);
      for (std::size_t i = start; i < end; ++i) {
        for (double& e : eps) e = eps_rng.normal();
        const LossParts parts =
            vae_backward(params, windows[order[i]].values, eps, config.beta, config.c, grads);
        record.total += parts.total;
        record.recon += parts.recon;
        record.kl += parts.kl;
      }
      flatten_params(params, flat_params);
      flatten_grads(grads, flat_grads);
      for (double& g : flat_grads) g /= batch_n;
      nn::adam_step(flat_params, flat_grads, adam, adam_cfg);
      unflatten_params(flat_params, params);
    }
    const auto n = static_cast<double>(windows.size());
    record.total /= n;
    record.recon /= n;
    record.kl /= n;
    if (!std::isfinite(record.total)) {
      throw ModelError("train: loss diverged at epoch " + std::to_string(epoch));
    }
    history.push_back(record);
  }
  return {std::move(params), std::move(history)};
}

namespace {

constexpr int kCheckpointVersion = 1;

json dense_to_json(const nn::DenseLayer& l) {
  return json{{"rows", l.w.rows}, {"cols", l.w.cols}, {"w", l.w.a}, {"b", l.b}};
}

nn::DenseLayer dense_from_json(const json& j) {
  nn::DenseLayer l(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto w = j.at("w").get<Vec>();
  const auto b = j.at("b").get<Vec>();
  if (w.size() != l.w.a.size() || b.size() != l.b.size()) {
    throw ModelError("checkpoint: tensor size does not match declared shape");
  }
  l.w.a = w;
  l.b = b;
  if (!all_finite(l.w) || !all_finite(l.b)) {
    throw ModelError("checkpoint: non-finite parameter value");
  }
  return l;
}

json mlp_to_json(const nn::Mlp& m) {
  json layers = json::array();
  for (const auto& l : m.layers) layers.push_back(dense_to_json(l));
  json acts = json::array();
  for (auto a : m.spec.activations) {
    acts.push_back(a == nn::Activation::Relu ? "relu" : "identity");
  }
  return json{{"sizes", m.spec.sizes}, {"activations", acts}, {"layers", layers}};
}

nn::Mlp mlp_from_json(const json& j) {
  nn::Mlp m;
  m.spec.sizes = j.at("sizes").get<std::vector<std::size_t>>();
  for (const auto& a : j.at("activations")) {
    const auto s = a.get<std::string>();
    if (s == "relu") {
      m.spec.activations.push_back(nn::Activation::Relu);
    } else if (s == "identity") {
      m.spec.activations.push_back(nn::Activation::Identity);
    } else {
      throw ModelError("checkpoint: unknown activation '" + s + "'");
    }
  }
  m.spec.validate();
  for (const auto& lj : j.at("layers")) m.layers.push_back(dense_from_json(lj));
  if (m.layers.size() != m.spec.layer_count()) {
    throw ModelError("checkpoint: layer count does not match spec");
  }
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    if (m.layers[l].in_dim() != m.spec.sizes[l] || m.layers[l].out_dim() != m.spec.sizes[l + 1]) {
      throw ModelError("checkpoint: layer shape does not match declared sizes");
    }
  }
  return m;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ckpt.params.validate();
  json j;
  j["format"] = "condmon-checkpoint";
  j["version"] = kCheckpointVersion;
  j["arch"] = {{"input", ckpt.params.input_dim()},
               {"trunk", ckpt.params.encoder_trunk.spec.sizes},
               {"latent", ckpt.params.latent_dim()}};
  j["train_config"] = {{"epochs", ckpt.config.epochs},
                       {"learning_rate", ckpt.config.learning_rate},
                       {"beta", ckpt.config.beta},
                       {"c", ckpt.config.c},
                       {"batch_size", ckpt.config.batch_size},
                       {"seed", ckpt.config.seed}};
  j["norm_stats"] = {{"mean", ckpt.stats.mean}, {"std", ckpt.stats.std}};
  j["params"] = {{"encoder_trunk", mlp_to_json(ckpt.params.encoder_trunk)},
                 {"mu_head", dense_to_json(ckpt.params.mu_head)},
                 {"logvar_head", dense_to_json(ckpt.params.logvar_head)},
                 {"decoder", mlp_to_json(ckpt.params.decoder)}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  out << j.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ModelError("checkpoint parse error: " + std::string(e.what()));
  }
  try {
    if (j.at("format").get<std::string>() != "condmon-checkpoint") {
      throw ModelError("not a checkpoint file");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw ModelError("unsupported checkpoint version");
    }
    if (j.at("arch").at("latent").get<std::size_t>() != kLatentDim) {
      throw ModelError("checkpoint: latent dimension must be " + std::to_string(kLatentDim));
    }
    Checkpoint ckpt;
    const json& p = j.at("params");
    ckpt.params.encoder_trunk = mlp_from_json(p.at("encoder_trunk"));
    ckpt.params.mu_head = dense_from_json(p.at("mu_head"));
    ckpt.params.logvar_head = dense_from_json(p.at("logvar_head"));
    ckpt.params.decoder = mlp_from_json(p.at("decoder"));
    ckpt.params.validate();
    if (ckpt.params.latent_dim() != kLatentDim) {
      throw ModelError("checkpoint: parameter latent dimension must be " +
                       std::to_string(kLatentDim));
    }
    const json& tc = j.at("train_config");
    ckpt.config.epochs = tc.at("epochs").get<std::size_t>();
    ckpt.config.learning_rate = tc.at("learning_rate").get<double>();
    ckpt.config.beta = tc.at("beta").get<double>();
    ckpt.config.c = tc.at("c").get<double>();
    ckpt.config.batch_size = tc.at("batch_size").get<std::size_t>();
    ckpt.config.seed = tc.at("seed").get<std::uint64_t>();
    const json& ns = j.at("norm_stats");
    ckpt.stats.mean = ns.at("mean").get<double>();
    ckpt.stats.std = ns.at("std").get<double>();
    if (!std::isfinite(ckpt.stats.mean) || !(ckpt.stats.std > 0.0)) {
      throw ModelError("checkpoint: invalid normalization stats");
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw ModelError("checkpoint field error: " + std::string(e.what()));
  }
}

}  // namespace condmon::vae
