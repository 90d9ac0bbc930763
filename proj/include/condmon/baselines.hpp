#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "condmon/data.hpp"
#include "condmon/health.hpp"
#include "condmon/nn.hpp"
#include "condmon/vae.hpp"

namespace condmon::baselines {

// KNN over the same normalized windows the VAE consumes. A query whose mean
// distance to its k nearest references exceeds severe_threshold is the
// unseen class; otherwise majority vote (ties go to degraded).
struct KnnModel {
  std::vector<Vec> points;
  std::vector<data::Condition> labels;  // normal/degraded only
  std::size_t k = 5;
  double severe_threshold = 0.0;
  health::Metric metric = health::Metric::Euclidean;
};

// severe_threshold = max over degraded training points of the leave-one-out
// mean distance to their k nearest neighbours.
KnnModel knn_fit(const std::vector<data::SignalWindow>& train, std::size_t k,
                 health::Metric metric);

data::Condition knn_classify(const KnnModel& model, std::span<const double> x);

double knn_mean_distance(const KnnModel& model, std::span<const double> x);

struct KmeansResult {
  std::vector<Vec> centroids;
  std::vector<std::size_t> assignment;
  std::vector<double> wcss_per_iter;  // within-cluster sum of squares, per Lloyd iteration
};

// Lloyd's algorithm with k-means++ style seeding; empty clusters are
// re-seeded from the farthest point.
KmeansResult kmeans_cluster(const std::vector<Vec>& points, std::size_t k, std::uint64_t seed,
                            std::size_t max_iters = 100);

struct KmeansModel {
  std::vector<Vec> centroids;
  std::vector<data::Condition> cluster_labels;  // majority label per cluster
  double severe_threshold = 0.0;
  health::Metric metric = health::Metric::Euclidean;
};

KmeansModel kmeans_fit(const std::vector<data::SignalWindow>& train, std::size_t k,
                       std::uint64_t seed, std::size_t max_iters = 100,
                       health::Metric metric = health::Metric::Euclidean);

// Nearest centroid's label, or severe when the distance overflows the
// threshold; exact ties go to the lower-index centroid.
data::Condition kmeans_classify(const KmeansModel& model, std::span<const double> x);

// Deterministic autoencoder with the same layer ladder as the VAE
// (256-128-32-8-5 bottleneck) and no logvar head; trained on plain
// reconstruction loss.
struct VanillaAeParams {
  nn::Mlp encoder;  // 256-128-32-8-5, identity at the bottleneck
  nn::Mlp decoder;  // 5-8-32-128-256, identity output
};

VanillaAeParams ae_train(const std::vector<data::SignalWindow>& windows,
                         const vae::TrainConfig& config, vae::TrainHistory* history = nullptr);

Vec ae_encode(const VanillaAeParams& params, const Vec& x);

double ae_health_index(const VanillaAeParams& params, const data::SignalWindow& window,
                       const health::ReferenceMean& ref, health::Metric metric);

}  // namespace condmon::baselines
