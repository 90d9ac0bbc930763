#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "condmon/linalg.hpp"
#include "condmon/rng.hpp"

namespace condmon::data {

inline constexpr std::size_t kWindowLen = 256;

enum class Condition { Normal, Degraded, Severe, Unlabeled };

std::string_view to_string(Condition c);
Condition condition_from_string(std::string_view s);

struct RawRecording {
  Matrix samples;  // n_rows x n_channels
  int file_index = 0;
  double sample_rate_hz = 20000.0;
};

struct WindowSource {
  int file_index = 0;
  int channel = 0;
  std::int64_t offset = 0;
};

struct SignalWindow {
  Vec values;  // length kWindowLen
  Condition label = Condition::Unlabeled;
  WindowSource source;
};

struct NormStats {
  double mean = 0.0;
  double std = 1.0;
};

// Inclusive file-index interval.
struct FileRange {
  int lo = 0;
  int hi = -1;  // empty when hi < lo

  bool contains(int i) const { return i >= lo && i <= hi; }
  bool empty() const { return hi < lo; }
  bool overlaps(const FileRange& o) const {
    return !empty() && !o.empty() && lo <= o.hi && o.lo <= hi;
  }
};

// Defaults follow IMS Set 2 Bearing 1: degradation starts after file 710,
// 982 files total, failure at the end. Normal skips the running-in phase.
struct LabelPlan {
  FileRange normal{100, 149};
  FileRange degraded{711, 900};
  FileRange severe{972, 981};
  int channel = 0;

  void validate() const;
  Condition label_for(int file_index) const;
};

// Whitespace-separated ASCII, one row per time sample, one column per channel.
RawRecording parse_ims_file(std::string_view text, std::size_t expected_channels,
                            int file_index = 0);
RawRecording read_ims_file(const std::filesystem::path& path, std::size_t expected_channels,
                           int file_index);

// IMS file names are timestamps; lexicographic order is time order.
std::vector<std::filesystem::path> list_recording_files(const std::filesystem::path& dir);

// Non-overlapping consecutive windows; the remainder is discarded.
std::vector<SignalWindow> segment(const RawRecording& recording, int channel,
                                  std::size_t window = kWindowLen);

void label_windows(std::vector<SignalWindow>& windows, const LabelPlan& plan);

NormStats compute_norm_stats(const std::vector<SignalWindow>& windows);
Vec normalize_values(const Vec& values, const NormStats& stats);
Vec denormalize_values(const Vec& values, const NormStats& stats);
void normalize(std::vector<SignalWindow>& windows, const NormStats& stats);

// Deterministic permutation; |train| = round(train_fraction * N).
std::pair<std::vector<SignalWindow>, std::vector<SignalWindow>> shuffle_split(
    std::vector<SignalWindow> windows, double train_fraction, std::uint64_t seed);

// noise ~ N(0, sigma^2), sigma^2 = mean(x^2) / 10^(snr_db/10).
SignalWindow add_awgn(const SignalWindow& window, double snr_db, std::uint64_t seed);

// Synthetic vibration stand-in for the IMS data: background noise plus two
// shaft tones; faults add decaying resonance bursts whose energy orders the
// severity. The knobs are continuous so a run-to-failure ramp can sweep them.
struct SynthProfile {
  double noise_std_lo = 0.8;
  double noise_std_hi = 1.2;
  double tone1_amp = 1.5;   // 8 cycles per window
  double tone2_amp = 0.8;   // 13 cycles per window
  double impulse_amp = 0.0;
  double impulses_per_window = 0.0;
  double broadband_std = 0.0;

  static SynthProfile for_condition(Condition c);
  // severity in [0, 1]: 0 = healthy, 1 = failure.
  static SynthProfile for_severity(double severity);
};

SignalWindow synth_window(const SynthProfile& profile, Condition label, Rng& rng);
std::vector<SignalWindow> synth_generate(Condition condition, std::size_t n_windows,
                                         std::uint64_t seed);

// Ordered recordings whose severity ramps monotonically from healthy to
// failed; labels via thirds of the ramp (normal / degraded / severe).
std::vector<RawRecording> synth_run_to_failure(std::size_t n_files,
                                               std::size_t windows_per_file, std::uint64_t seed);
Condition run_to_failure_label(std::size_t file, std::size_t n_files);

// Window CSV: file_index,channel,offset,label,v0..v255
void write_windows_csv(const std::vector<SignalWindow>& windows, std::ostream& out);
void write_windows_csv(const std::vector<SignalWindow>& windows,
                       const std::filesystem::path& path);
std::vector<SignalWindow> read_windows_csv(std::istream& in);
std::vector<SignalWindow> read_windows_csv(const std::filesystem::path& path);

void write_ims_file(const RawRecording& recording, const std::filesystem::path& path);

std::uint64_t fingerprint_windows(const std::vector<SignalWindow>& windows);

}  // namespace condmon::data
