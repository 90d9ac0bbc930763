#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "condmon/data.hpp"
#include "condmon/vae.hpp"

namespace condmon::health {

enum class Metric { Euclidean, Manhattan, Minkowski3 };

std::string_view to_string(Metric m);
Metric metric_from_string(std::string_view s);

double distance(std::span<const double> p, std::span<const double> q, Metric metric);

// Mean of the encoded mus of the training normal windows.
struct ReferenceMean {
  Vec mu_ref;
};

ReferenceMean reference_mean(const std::vector<vae::LatentCode>& codes);

// distance(encode(window).mu, mu_ref); deterministic, no sampling.
// The window must already be normalized.
double health_index(const vae::VaeParams& params, const data::SignalWindow& window,
                    const ReferenceMean& ref, Metric metric);

struct ThresholdSet {
  double t_normal = 0.0;
  double t_degraded = 0.0;
  Metric metric = Metric::Euclidean;
};

// t_normal / t_degraded are the max health indexes over the training normal /
// degraded windows. Throws when the classes fail to separate
// (t_normal > t_degraded).
ThresholdSet fit_thresholds(const vae::VaeParams& params, const ReferenceMean& ref,
                            const std::vector<data::SignalWindow>& train_normal,
                            const std::vector<data::SignalWindow>& train_degraded,
                            Metric metric);

// hi <= t_normal -> normal; <= t_degraded -> degraded; else severe.
// Boundaries are inclusive on the lower class so training maxima stay in-class.
data::Condition classify(double hi, const ThresholdSet& thresholds);

struct HealthRecord {
  int file_index = 0;
  double health_index = 0.0;
  Metric metric = Metric::Euclidean;
  data::Condition predicted = data::Condition::Unlabeled;
  std::optional<data::Condition> truth;
};

enum class Aggregate { Mean, Median };

// One record per recording: segment, normalize, per-window HI, aggregate.
std::vector<HealthRecord> score_run_to_failure(
    const vae::VaeParams& params, const data::NormStats& stats, const ReferenceMean& ref,
    const ThresholdSet& thresholds, const std::vector<data::RawRecording>& files, int channel,
    Metric metric, Aggregate aggregate = Aggregate::Mean);

// Model-side artifacts persisted next to the checkpoint.
struct ThresholdFile {
  ThresholdSet thresholds;
  ReferenceMean ref;
};

void save_thresholds(const ThresholdFile& tf, const std::filesystem::path& path);
ThresholdFile load_thresholds(const std::filesystem::path& path);

}  // namespace condmon::health
