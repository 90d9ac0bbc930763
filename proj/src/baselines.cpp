#include "condmon/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "condmon/errors.hpp"

namespace condmon::baselines {

using data::Condition;
using health::Metric;

namespace {

void check_train_labels(const std::vector<data::SignalWindow>& train) {
  if (train.empty()) throw DataError("baseline fit: empty training set");
  for (const auto& w : train) {
    if (w.label != Condition::Normal && w.label != Condition::Degraded) {
      throw DataError("baseline fit: training set contaminated with '" +
                      std::string(to_string(w.label)) + "'");
    }
  }
}

// Mean distance from x to its k nearest entries of points, optionally
// skipping one index (leave-one-out).
double mean_k_distance(const std::vector<Vec>& points, std::span<const double> x, std::size_t k,
                       Metric metric, std::size_t skip = SIZE_MAX) {
  std::vector<double> dists;
  dists.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i == skip) continue;
    dists.push_back(health::distance(points[i], x, metric));
  }
  if (dists.size() < k) throw DataError("knn: k exceeds reference set size");
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   dists.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += dists[i];
  return acc / static_cast<double>(k);
}

}  // namespace

KnnModel knn_fit(const std::vector<data::SignalWindow>& train, std::size_t k, Metric metric) {
  check_train_labels(train);
  if (k == 0 || k > train.size()) throw ArgError("knn_fit: k must be in [1, train size]");
  KnnModel model;
  model.k = k;
  model.metric = metric;
  model.points.reserve(train.size());
  model.labels.reserve(train.size());
  for (const auto& w : train) {
    model.points.push_back(w.values);
    model.labels.push_back(w.label);
  }
  // Threshold from the degraded points' own neighbourhoods, leave-one-out so
  // a point never counts itself as its nearest neighbour.
  double thr = 0.0;
  bool any_degraded = false;
  const std::size_t loo_k = std::min(k, model.points.size() - 1);
  for (std::size_t i = 0; i < model.points.size(); ++i) {
    if (model.labels[i] != Condition::Degraded) continue;
    any_degraded = true;
    thr = std::max(thr, mean_k_distance(model.points, model.points[i], loo_k, metric, i));
  }
  if (!any_degraded) throw DataError("knn_fit: no degraded training points");
  model.severe_threshold = thr;
  return model;
}

double knn_mean_distance(const KnnModel& model, std::span<const double> x) {
  if (model.points.empty()) throw ModelError("knn: empty model");
  return mean_k_distance(model.points, x, model.k, model.metric);
}

data::Condition knn_classify(const KnnModel& model, std::span<const double> x) {
  if (model.points.empty()) throw ModelError("knn: empty model");
  if (x.size() != model.points.front().size()) throw ShapeError("knn: dimension mismatch");

  std::vector<std::pair<double, std::size_t>> dists;
  dists.reserve(model.points.size());
  for (std::size_t i = 0; i < model.points.size(); ++i) {
    dists.emplace_back(health::distance(model.points[i], x, model.metric), i);
  }
  std::partial_sort(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(model.k),
                    dists.end());
  double mean = 0.0;
  std::size_t votes_normal = 0;
  std::size_t votes_degraded = 0;
  for (std::size_t i = 0; i < model.k; ++i) {
    mean += dists[i].first;
    if (model.labels[dists[i].second] == Condition::Normal) {
      ++votes_normal;
    } else {
      ++votes_degraded;
    }
  }
  mean /= static_cast<double>(model.k);
  if (mean > model.severe_threshold) return Condition::Severe;
  return votes_normal > votes_degraded ? Condition::Normal : Condition::Degraded;
}

KmeansResult kmeans_cluster(const std::vector<Vec>& points, std::size_t k, std::uint64_t seed,
                            std::size_t max_iters) {
  if (k == 0) throw ArgError("kmeans: k must be >= 1");
  if (points.size() < k) throw DataError("kmeans: fewer points than clusters");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw ShapeError("kmeans: ragged points");
  }
  Rng rng(derive_seed(seed, 0x43A7));

  // k-means++ seeding: weight each candidate by its squared distance to the
  // nearest centroid chosen so far.
  KmeansResult res;
  res.centroids.push_back(points[rng.below(points.size())]);
  std::vector<double> d2(points.size());
  while (res.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::max();
      for (const auto& c : res.centroids) {
        const double d = health::distance(points[i], c, Metric::Euclidean);
        best = std::min(best, d * d);
      }
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      // All remaining points coincide with a centroid; any pick works.
      res.centroids.push_back(points[rng.below(points.size())]);
      continue;
    }
    double target = rng.uniform() * total;
    std::size_t pick = points.size() - 1;
    for (std::size_t i = 0; i < points.size(); ++i) {
      target -= d2[i];
      if (target <= 0.0) {
        pick = i;
        break;
      }
    }
    res.centroids.push_back(points[pick]);
  }

  res.assignment.assign(points.size(), 0);
  std::vector<std::size_t> counts(k);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    // Assignment step.
    bool changed = false;
    double wcss = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::max();
      for (std::size_t cidx = 0; cidx < k; ++cidx) {
        const double d = health::distance(points[i], res.centroids[cidx], Metric::Euclidean);
        if (d < best_d) {
          best_d = d;
          best = cidx;
        }
      }
      if (res.assignment[i] != best) {
        res.assignment[i] = best;
        changed = true;
      }
      wcss += best_d * best_d;
    }
    res.wcss_per_iter.push_back(wcss);
    if (!changed && iter > 0) break;

    // Update step.
    for (auto& c : res.centroids) std::fill(c.begin(), c.end(), 0.0);
    std::fill(counts.begin(), counts.end(), std::size_t{0});
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto cidx = res.assignment[i];
      ++counts[cidx];
      for (std::size_t j = 0; j < dim; ++j) res.centroids[cidx][j] += points[i][j];
    }
    for (std::size_t cidx = 0; cidx < k; ++cidx) {
      if (counts[cidx] == 0) {
        // Re-seed the empty cluster from the farthest point.
        std::size_t far_i = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
          const double d =
              health::distance(points[i], res.centroids[res.assignment[i]], Metric::Euclidean);
          if (d > far_d) {
            far_d = d;
            far_i = i;
          }
        }
        res.centroids[cidx] = points[far_i];
      } else {
        for (std::size_t j = 0; j < dim; ++j) {
          res.centroids[cidx][j] /= static_cast<double>(counts[cidx]);
        }
      }
    }
  }
  return res;
}

KmeansModel kmeans_fit(const std::vector<data::SignalWindow>& train, std::size_t k,
                       std::uint64_t seed, std::size_t max_iters, Metric metric) {
  check_train_labels(train);
  std::vector<Vec> points;
  points.reserve(train.size());
  for (const auto& w : train) points.push_back(w.values);
  const KmeansResult res = kmeans_cluster(points, k, seed, max_iters);

  KmeansModel model;
  model.centroids = res.centroids;
  model.metric = metric;
  model.cluster_labels.resize(k);
  for (std::size_t cidx = 0; cidx < k; ++cidx) {
    std::size_t n_normal = 0;
    std::size_t n_degraded = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (res.assignment[i] != cidx) continue;
      if (train[i].label == Condition::Normal) {
        ++n_normal;
      } else {
        ++n_degraded;
      }
    }
    model.cluster_labels[cidx] = n_normal > n_degraded ? Condition::Normal : Condition::Degraded;
  }
  // Overflow threshold: no training point may land beyond it, so the unseen
  // class only captures genuinely out-of-envelope queries.
  double thr = 0.0;
  for (const auto& p : points) {
    double best = std::numeric_limits<double>::max();
    for (const auto& c : model.centroids) {
      best = std::min(best, health::distance(p, c, metric));
    }
    thr = std::max(thr, best);
  }
  model.severe_threshold = thr;
  return model;
}

data::Condition kmeans_classify(const KmeansModel& model, std::span<const double> x) {
  if (model.centroids.empty()) throw ModelError("kmeans: empty model");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::max();
  for (std::size_t cidx = 0; cidx < model.centroids.size(); ++cidx) {
    const double d = health::distance(model.centroids[cidx], x, model.metric);
    if (d < best_d) {  // strict: ties keep the lower index
      best_d = d;
      best = cidx;
    }
  }
  if (best_d > model.severe_threshold) return Condition::Severe;
  return model.cluster_labels[best];
}

namespace {

struct AeTrace {
  nn::MlpTrace enc;
  nn::MlpTrace dec;
};

double ae_backward(const VanillaAeParams& params, const Vec& x, nn::Mlp& enc_grads,
                   nn::Mlp& dec_grads) {
  const nn::MlpTrace enc = nn::mlp_forward(params.encoder, x);
  const nn::MlpTrace dec = nn::mlp_forward(params.decoder, enc.output());
  const Vec& xhat = dec.output();
  double sq = 0.0;
  Vec dxhat(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = xhat[i] - x[i];
    sq += r * r;
    dxhat[i] = r;
  }
  const Vec dz = nn::mlp_backward(params.decoder, dec, dxhat, dec_grads);
  nn::mlp_backward(params.encoder, enc, dz, enc_grads);
  return 0.5 * sq;
}

}  // namespace

VanillaAeParams ae_train(const std::vector<data::SignalWindow>& windows,
                         const vae::TrainConfig& config, vae::TrainHistory* history) {
  config.validate();
  check_train_labels(windows);
  for (const auto& w : windows) {
    if (w.values.size() != vae::kInputDim) throw ShapeError("ae_train: window length != 256");
  }

  Rng init_rng(derive_seed(config.seed, 0xAE17));
  VanillaAeParams params;
  params.encoder = nn::make_mlp(
      nn::MlpSpec::ladder({256, 128, 32, 8, vae::kLatentDim}, nn::Activation::Identity),
      init_rng);
  params.decoder = nn::make_mlp(
      nn::MlpSpec::ladder({vae::kLatentDim, 8, 32, 128, 256}, nn::Activation::Identity),
      init_rng);

  const std::size_t n_params = params.encoder.param_count() + params.decoder.param_count();
  nn::AdamState adam(n_params);
  nn::AdamConfig adam_cfg;
  adam_cfg.lr = config.learning_rate;

  nn::Mlp enc_grads = nn::make_grads_like(params.encoder);
  nn::Mlp dec_grads = nn::make_grads_like(params.decoder);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Vec flat_params;
  Vec flat_grads;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, 0xAE58, epoch));
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      for (auto& l : enc_grads.layers) {
        std::fill(l.w.a.begin(), l.w.a.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
      }
      for (auto& l : dec_grads.layers) {
        std::fill(l.w.a.begin(), l.w.a.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
      }
      for (std::size_t i = start; i < end; ++i) {
        epoch_loss += ae_backward(params, windows[order[i]].values, enc_grads, dec_grads);
      }
      flat_params.clear();
      nn::flatten_mlp(params.encoder, flat_params);
      nn::flatten_mlp(params.decoder, flat_params);
      flat_grads.clear();
      nn::flatten_mlp(enc_grads, flat_grads);
      nn::flatten_mlp(dec_grads, flat_grads);
      const auto batch_n = static_cast<double>(end - start);
      for (double& g : flat_grads) g /= batch_n;
      nn::adam_step(flat_params, flat_grads, adam, adam_cfg);
      const std::size_t enc_n = params.encoder.param_count();
      nn::unflatten_mlp(std::span<const double>(flat_params).subspan(0, enc_n), params.encoder);
      nn::unflatten_mlp(std::span<const double>(flat_params).subspan(enc_n), params.decoder);
    }
    if (history) {
      vae::EpochRecord rec;
      rec.total = rec.recon = epoch_loss / static_cast<double>(windows.size());
      history->push_back(rec);
    }
  }
  return params;
}

Vec ae_encode(const VanillaAeParams& params, const Vec& x) {
  return nn::mlp_forward(params.encoder, x).output();
}

double ae_health_index(const VanillaAeParams& params, const data::SignalWindow& window,
                       const health::ReferenceMean& ref, health::Metric metric) {
  const Vec z = ae_encode(params, window.values);
  return health::distance(z, ref.mu_ref, metric);
}

}  // namespace condmon::baselines
