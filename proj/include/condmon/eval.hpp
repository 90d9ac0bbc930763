#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "condmon/baselines.hpp"
#include "condmon/data.hpp"
#include "condmon/health.hpp"
#include "condmon/vae.hpp"

namespace condmon::eval {

// Classes indexed normal=0, degraded=1, severe=2.
std::size_t class_index(data::Condition c);

struct ConfusionMatrix {
  std::array<std::array<std::int64_t, 3>, 3> counts{};  // [truth][predicted]

  std::int64_t total() const;
  std::int64_t trace() const;
};

ConfusionMatrix confusion(const std::vector<health::HealthRecord>& records);
void count_prediction(ConfusionMatrix& cm, data::Condition truth, data::Condition predicted);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricReport {
  double accuracy = 0.0;
  double precision = 0.0;  // macro
  double recall = 0.0;     // macro
  double f1 = 0.0;         // macro
  std::array<ClassScores, 3> per_class{};
  double unseen_class_accuracy = 0.0;  // recall of severe
};

// Zero-denominator convention: precision/recall/f1 = 0 when undefined.
MetricReport metrics(const ConfusionMatrix& cm);

// Classifies a raw (unnormalized) window; owns its normalization.
using WindowClassifier = std::function<data::Condition(const data::SignalWindow&)>;

struct SweepPoint {
  double snr_db = 0.0;  // +inf for the clean baseline
  MetricReport report;
};

// Clean entry first, then one entry per requested SNR. Fresh noise sub-seed
// per (snr, window).
std::vector<SweepPoint> noise_sweep(const WindowClassifier& classifier,
                                    const std::vector<data::SignalWindow>& test,
                                    const std::vector<double>& snr_db, std::uint64_t seed);

struct MethodReport {
  std::string method;
  std::uint64_t train_fingerprint = 0;
  std::uint64_t test_fingerprint = 0;
  MetricReport report;
};

struct CompareOptions {
  std::size_t knn_k = 5;
  std::size_t kmeans_k = 2;
  health::Metric metric = health::Metric::Euclidean;
};

// Fits vae, knn, kmeans and vanilla_ae on the identical raw training split
// and scores the identical test split. Throws on fingerprint mismatch.
std::vector<MethodReport> compare_methods(const std::vector<data::SignalWindow>& train_raw,
                                          const std::vector<data::SignalWindow>& test_raw,
                                          const vae::TrainConfig& config,
                                          const CompareOptions& opts);

void check_same_split(const std::vector<MethodReport>& rows);

// --- report emission ---------------------------------------------------

// health series CSV: file_index,health_index,metric,predicted,truth
void write_health_csv(const std::vector<health::HealthRecord>& records,
                      const std::filesystem::path& path);
std::vector<health::HealthRecord> read_health_csv(const std::filesystem::path& path);

struct MetricsRow {
  std::string method;
  std::string metric_name;
  double value = 0.0;
};

// metrics CSV: method,metric_name,value
void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path);
std::vector<MetricsRow> metrics_rows(const std::string& method, const MetricReport& report);

// sweep CSV: snr_db,accuracy,precision,recall,f1
void write_sweep_csv(const std::vector<SweepPoint>& points, const std::filesystem::path& path);
std::vector<SweepPoint> read_sweep_csv(const std::filesystem::path& path);

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Minimal static SVG line chart, no external assets.
void write_line_chart_svg(const std::filesystem::path& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<ChartSeries>& series);

void write_health_series_svg(const std::vector<health::HealthRecord>& records,
                             const std::filesystem::path& path);
void write_sweep_svg(const std::vector<SweepPoint>& points, const std::filesystem::path& path);

}  // namespace condmon::eval
