#include "condmon/health.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "condmon/errors.hpp"

namespace condmon::health {

using nlohmann::json;

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Euclidean: return "euclidean";
    case Metric::Manhattan: return "manhattan";
    case Metric::Minkowski3: return "minkowski3";
  }
  return "euclidean";
}

Metric metric_from_string(std::string_view s) {
  if (s == "euclidean") return Metric::Euclidean;
  if (s == "manhattan") return Metric::Manhattan;
  if (s == "minkowski3") return Metric::Minkowski3;
  throw ArgError("unknown distance metric: '" + std::string(s) + "'");
}

double distance(std::span<const double> p, std::span<const double> q, Metric metric) {
  if (p.size() != q.size()) throw ShapeError("distance: dimension mismatch");
  double acc = 0.0;
  switch (metric) {
    case Metric::Euclidean:
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = q[i] - p[i];
        acc += d * d;
      }
      return std::sqrt(acc);
    case Metric::Manhattan:
      for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(q[i] - p[i]);
      return acc;
    case Metric::Minkowski3:
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = std::abs(q[i] - p[i]);
        acc += d * d * d;
      }
      return std::cbrt(acc);
  }
  return 0.0;
}

ReferenceMean reference_mean(const std::vector<vae::LatentCode>& codes) {
  if (codes.empty()) throw DataError("reference_mean: no codes");
  ReferenceMean ref;
  ref.mu_ref.assign(codes.front().mu.size(), 0.0);
  for (const auto& c : codes) {
    if (c.mu.size() != ref.mu_ref.size()) throw ShapeError("reference_mean: dimension mismatch");
    for (std::size_t i = 0; i < c.mu.size(); ++i) ref.mu_ref[i] += c.mu[i];
  }
  for (double& v : ref.mu_ref) v /= static_cast<double>(codes.size());
  return ref;
}

double health_index(const vae::VaeParams& params, const data::SignalWindow& window,
                    const ReferenceMean& ref, Metric metric) {
  const vae::LatentCode code = vae::encode(params, window.values);
  return distance(code.mu, ref.mu_ref, metric);
}

ThresholdSet fit_thresholds(const vae::VaeParams& params, const ReferenceMean& ref,
                            const std::vector<data::SignalWindow>& train_normal,
                            const std::vector<data::SignalWindow>& train_degraded,
                            Metric metric) {
  if (train_normal.empty() || train_degraded.empty()) {
    throw DataError("fit_thresholds: both training sets must be non-empty");
  }
  ThresholdSet t;
  t.metric = metric;
  for (const auto& w : train_normal) {
    t.t_normal = std::max(t.t_normal, health_index(params, w, ref, metric));
  }
  for (const auto& w : train_degraded) {
    t.t_degraded = std::max(t.t_degraded, health_index(params, w, ref, metric));
  }
  if (t.t_normal > t.t_degraded) {
    throw ModelError("fit_thresholds: degenerate separation, max normal HI " +
                     std::to_string(t.t_normal) + " exceeds max degraded HI " +
                     std::to_string(t.t_degraded));
  }
  return t;
}

data::Condition classify(double hi, const ThresholdSet& thresholds) {
  if (hi <= thresholds.t_normal) return data::Condition::Normal;
  if (hi <= thresholds.t_degraded) return data::Condition::Degraded;
  return data::Condition::Severe;
}

std::vector<HealthRecord> score_run_to_failure(
    const vae::VaeParams& params, const data::NormStats& stats, const ReferenceMean& ref,
    const ThresholdSet& thresholds, const std::vector<data::RawRecording>& files, int channel,
    Metric metric, Aggregate aggregate) {
  std::vector<HealthRecord> records;
  records.reserve(files.size());
  std::vector<double> his;
  for (const auto& file : files) {
    auto windows = data::segment(file, channel);
    if (windows.empty()) continue;  // too short to score; gap, not a crash
    his.clear();
    for (auto& w : windows) {
      w.values = data::normalize_values(w.values, stats);
      his.push_back(health_index(params, w, ref, metric));
    }
    double agg = 0.0;
    if (aggregate == Aggregate::Mean) {
      for (double h : his) agg += h;
      agg /= static_cast<double>(his.size());
    } else {
      std::sort(his.begin(), his.end());
      const std::size_t mid = his.size() / 2;
      agg = his.size() % 2 ? his[mid] : 0.5 * (his[mid - 1] + his[mid]);
    }
    HealthRecord rec;
    rec.file_index = file.file_index;
    rec.health_index = agg;
    rec.metric = metric;
    rec.predicted = classify(agg, thresholds);
    records.push_back(rec);
  }
  return records;
}

void save_thresholds(const ThresholdFile& tf, const std::filesystem::path& path) {
  json j;
  j["format"] = "condmon-thresholds";
  j["version"] = 1;
  j["metric"] = std::string(to_string(tf.thresholds.metric));
  j["t_normal"] = tf.thresholds.t_normal;
  j["t_degraded"] = tf.thresholds.t_degraded;
  j["mu_ref"] = tf.ref.mu_ref;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write thresholds: " + path.string());
  out << j.dump(1) << "\n";
}

ThresholdFile load_thresholds(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open thresholds: " + path.string());
  json j;
  try {
    in >> j;
    if (j.at("format").get<std::string>() != "condmon-thresholds") {
      throw ModelError("not a thresholds file");
    }
    if (j.at("version").get<int>() != 1) throw ModelError("unsupported thresholds version");
    ThresholdFile tf;
    tf.thresholds.metric = metric_from_string(j.at("metric").get<std::string>());
    tf.thresholds.t_normal = j.at("t_normal").get<double>();
    tf.thresholds.t_degraded = j.at("t_degraded").get<double>();
    tf.ref.mu_ref = j.at("mu_ref").get<Vec>();
    if (tf.thresholds.t_normal < 0.0 || tf.thresholds.t_normal > tf.thresholds.t_degraded ||
        !all_finite(tf.ref.mu_ref)) {
      throw ModelError("thresholds file: invalid values");
    }
    return tf;
  } catch (const json::exception& e) {
    throw ModelError("thresholds parse error: " + std::string(e.what()));
  }
}

}  // namespace condmon::health
