#include "condmon/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "condmon/errors.hpp"
#include "condmon/hash.hpp"
#include "condmon/numfmt.hpp"

namespace condmon::data {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::Normal: return "normal";
    case Condition::Degraded: return "degraded";
    case Condition::Severe: return "severe";
    case Condition::Unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

Condition condition_from_string(std::string_view s) {
  if (s == "normal") return Condition::Normal;
  if (s == "degraded") return Condition::Degraded;
  if (s == "severe") return Condition::Severe;
  if (s == "unlabeled") return Condition::Unlabeled;
  throw DataError("unknown condition label: '" + std::string(s) + "'");
}

void LabelPlan::validate() const {
  if (normal.empty() || degraded.empty() || severe.empty()) {
    throw DataError("label plan: empty file range");
  }
  if (normal.overlaps(degraded) || normal.overlaps(severe) || degraded.overlaps(severe)) {
    throw DataError("label plan: overlapping file ranges");
  }
  if (degraded.lo <= normal.hi) {
    throw DataError("label plan: degraded range must start after normal range");
  }
  if (channel < 0) throw DataError("label plan: negative channel");
}

Condition LabelPlan::label_for(int file_index) const {
  if (normal.contains(file_index)) return Condition::Normal;
  if (degraded.contains(file_index)) return Condition::Degraded;
  if (severe.contains(file_index)) return Condition::Severe;
  return Condition::Unlabeled;
}

RawRecording parse_ims_file(std::string_view text, std::size_t expected_channels,
                            int file_index) {
  if (expected_channels == 0) throw DataError("parse_ims_file: expected_channels must be >= 1");
  std::vector<double> values;
  std::size_t n_rows = 0;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    // Skip blank lines (trailing newline etc.).
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    std::size_t fields = 0;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(line.data() + i, line.data() + j, v);
      if (ec != std::errc() || ptr != line.data() + j || !std::isfinite(v)) {
        throw DataError("parse_ims_file: bad token '" + std::string(line.substr(i, j - i)) +
                        "' at line " + std::to_string(line_no));
      }
      values.push_back(v);
      ++fields;
      i = j;
    }
    if (fields != expected_channels) {
      throw DataError("parse_ims_file: line " + std::to_string(line_no) + " has " +
                      std::to_string(fields) + " fields, expected " +
                      std::to_string(expected_channels));
    }
    ++n_rows;
  }
  if (n_rows == 0) throw DataError("parse_ims_file: empty file");

  RawRecording rec;
  rec.file_index = file_index;
  rec.samples = Matrix(n_rows, expected_channels);
  rec.samples.a = std::move(values);
  return rec;
}

RawRecording read_ims_file(const std::filesystem::path& path, std::size_t expected_channels,
                           int file_index) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open recording file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ims_file(ss.str(), expected_channels, file_index);
}

std::vector<std::filesystem::path> list_recording_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("not a dataset directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<SignalWindow> segment(const RawRecording& recording, int channel,
                                  std::size_t window) {
  if (channel < 0 || static_cast<std::size_t>(channel) >= recording.samples.cols) {
    throw DataError("segment: channel " + std::to_string(channel) + " out of range");
  }
  if (window == 0) throw DataError("segment: window must be >= 1");
  const std::size_t count = recording.samples.rows / window;
  std::vector<SignalWindow> out;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    SignalWindow sw;
    sw.values.resize(window);
    const std::size_t base = w * window;
    for (std::size_t i = 0; i < window; ++i) {
      sw.values[i] = recording.samples(base + i, static_cast<std::size_t>(channel));
    }
    sw.source = {recording.file_index, channel, static_cast<std::int64_t>(base)};
    out.push_back(std::move(sw));
  }
  return out;
}

void label_windows(std::vector<SignalWindow>& windows, const LabelPlan& plan) {
  plan.validate();
  for (auto& w : windows) w.label = plan.label_for(w.source.file_index);
}

NormStats compute_norm_stats(const std::vector<SignalWindow>& windows) {
  std::size_t n = 0;
  double mean = 0.0;
  for (const auto& w : windows) {
    for (double v : w.values) {
      ++n;
      mean += v;
    }
  }
  if (n == 0) throw DataError("compute_norm_stats: no samples");
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& w : windows) {
    for (double v : w.values) var += (v - mean) * (v - mean);
  }
  var /= static_cast<double>(n);
  if (var <= 0.0) throw DataError("compute_norm_stats: constant signal, std would be zero");
  return {mean, std::sqrt(var)};
}

Vec normalize_values(const Vec& values, const NormStats& stats) {
  if (stats.std <= 0.0) throw DataError("normalize: std must be positive");
  Vec out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - stats.mean) / stats.std;
  return out;
}

Vec denormalize_values(const Vec& values, const NormStats& stats) {
  Vec out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * stats.std + stats.mean;
  return out;
}

void normalize(std::vector<SignalWindow>& windows, const NormStats& stats) {
  for (auto& w : windows) w.values = normalize_values(w.values, stats);
}

std::pair<std::vector<SignalWindow>, std::vector<SignalWindow>> shuffle_split(
    std::vector<SignalWindow> windows, double train_fraction, std::uint64_t seed) {
  if (windows.empty()) throw DataError("shuffle_split: empty input");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ArgError("shuffle_split: train_fraction must be in (0, 1)");
  }
  Rng rng(derive_seed(seed, 0x5117));
  rng.shuffle(windows);
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(windows.size())));
  std::vector<SignalWindow> train(windows.begin(), windows.begin() + n_train);
  std::vector<SignalWindow> test(windows.begin() + n_train, windows.end());
  return {std::move(train), std::move(test)};
}

SignalWindow add_awgn(const SignalWindow& window, double snr_db, std::uint64_t seed) {
  double power = 0.0;
  for (double v : window.values) power += v * v;
  power /= static_cast<double>(window.values.size());
  if (power <= 0.0) throw DataError("add_awgn: all-zero window, SNR undefined");
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  Rng rng(derive_seed(seed, 0xA36Eull));
  SignalWindow out = window;
  for (double& v : out.values) v += rng.normal(0.0, sigma);
  return out;
}

SynthProfile SynthProfile::for_condition(Condition c) {
  SynthProfile p;
  switch (c) {
    case Condition::Normal:
      break;
    case Condition::Degraded:
      p.impulse_amp = 10.0;
      p.impulses_per_window = 3.0;
      break;
    case Condition::Severe:
      p.impulse_amp = 20.0;
      p.impulses_per_window = 8.0;
      p.broadband_std = 2.0;
      break;
    case Condition::Unlabeled:
      throw DataError("synth: no profile for unlabeled condition");
  }
  return p;
}

SynthProfile SynthProfile::for_severity(double severity) {
  const double s = std::clamp(severity, 0.0, 1.0);
  SynthProfile p;
  // Background level creeps up over the whole life; bursts appear after the
  // degradation onset and grow to the severe profile at end of life.
  p.noise_std_lo = p.noise_std_hi = 1.0 + 0.6 * s;
  const double onset = std::max(0.0, (s - 0.2) / 0.8);
  p.impulse_amp = 20.0 * std::pow(onset, 1.2);
  p.impulses_per_window = 8.0 * onset;
  p.broadband_std = 2.0 * std::max(0.0, (s - 0.6) / 0.4);
  return p;
}

SignalWindow synth_window(const SynthProfile& profile, Condition label, Rng& rng) {
  SignalWindow w;
  w.label = label;
  w.values.assign(kWindowLen, 0.0);

  const double noise_std = rng.uniform(profile.noise_std_lo, profile.noise_std_hi);
  for (double& v : w.values) v = rng.normal(0.0, noise_std);

  const double phi1 = rng.uniform(0.0, 2.0 * kPi);
  const double phi2 = rng.uniform(0.0, 2.0 * kPi);
  for (std::size_t k = 0; k < kWindowLen; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(kWindowLen);
    w.values[k] += profile.tone1_amp * std::sin(2.0 * kPi * 8.0 * t + phi1);
    w.values[k] += profile.tone2_amp * std::sin(2.0 * kPi * 13.0 * t + phi2);
  }

  if (profile.impulse_amp > 0.0 && profile.impulses_per_window > 0.0) {
    std::size_t count = static_cast<std::size_t>(profile.impulses_per_window);
    if (rng.uniform() < profile.impulses_per_window - static_cast<double>(count)) ++count;
    const double tau = 6.0;  // samples; decaying resonance burst
    for (std::size_t n = 0; n < count; ++n) {
      const auto pos = static_cast<std::size_t>(rng.below(kWindowLen));
      const double amp = profile.impulse_amp * rng.uniform(0.8, 1.2);
      const double phase = rng.uniform(0.0, 2.0 * kPi);
      for (std::size_t t = 0; t < 4 * static_cast<std::size_t>(tau) && pos + t < kWindowLen;
           ++t) {
        const double td = static_cast<double>(t);
        w.values[pos + t] +=
            amp * std::exp(-td / tau) * std::sin(2.0 * kPi * 0.25 * td + phase);
      }
    }
  }

  if (profile.broadband_std > 0.0) {
    for (double& v : w.values) v += rng.normal(0.0, profile.broadband_std);
  }
  return w;
}

std::vector<SignalWindow> synth_generate(Condition condition, std::size_t n_windows,
                                         std::uint64_t seed) {
  if (n_windows == 0) throw DataError("synth_generate: n_windows must be >= 1");
  const SynthProfile profile = SynthProfile::for_condition(condition);
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(condition) + 0x51));
  std::vector<SignalWindow> out;
  out.reserve(n_windows);
  for (std::size_t i = 0; i < n_windows; ++i) {
    SignalWindow w = synth_window(profile, condition, rng);
    w.source = {static_cast<int>(condition), 0, static_cast<std::int64_t>(i * kWindowLen)};
    out.push_back(std::move(w));
  }
  return out;
}

Condition run_to_failure_label(std::size_t file, std::size_t n_files) {
  const double s = n_files > 1 ? static_cast<double>(file) / static_cast<double>(n_files - 1)
                               : 0.0;
  if (s < 1.0 / 3.0) return Condition::Normal;
  if (s < 2.0 / 3.0) return Condition::Degraded;
  return Condition::Severe;
}

std::vector<RawRecording> synth_run_to_failure(std::size_t n_files,
                                               std::size_t windows_per_file,
                                               std::uint64_t seed) {
  if (n_files == 0 || windows_per_file == 0) {
    throw DataError("synth_run_to_failure: need at least one file and one window");
  }
  std::vector<RawRecording> files;
  files.reserve(n_files);
  for (std::size_t f = 0; f < n_files; ++f) {
    const double s =
        n_files > 1 ? static_cast<double>(f) / static_cast<double>(n_files - 1) : 0.0;
    const SynthProfile profile = SynthProfile::for_severity(s);
    Rng rng(derive_seed(seed, 0xF11E, f));
    RawRecording rec;
    rec.file_index = static_cast<int>(f);
    rec.samples = Matrix(windows_per_file * kWindowLen, 1);
    for (std::size_t w = 0; w < windows_per_file; ++w) {
      SignalWindow win = synth_window(profile, Condition::Unlabeled, rng);
      for (std::size_t i = 0; i < kWindowLen; ++i) {
        rec.samples(w * kWindowLen + i, 0) = win.values[i];
      }
    }
    files.push_back(std::move(rec));
  }
  return files;
}

void write_windows_csv(const std::vector<SignalWindow>& windows, std::ostream& out) {
  out << "file_index,channel,offset,label";
  for (std::size_t i = 0; i < kWindowLen; ++i) out << ",v" << i;
  out << "\n";
  for (const auto& w : windows) {
    out << w.source.file_index << ',' << w.source.channel << ',' << w.source.offset << ','
        << to_string(w.label);
    for (double v : w.values) out << ',' << fmt_double(v);
    out << "\n";
  }
}

void write_windows_csv(const std::vector<SignalWindow>& windows,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write windows CSV: " + path.string());
  write_windows_csv(windows, out);
}

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return fields;
}

}  // namespace

std::vector<SignalWindow> read_windows_csv(std::istream& in) {
  std::vector<SignalWindow> out;
  std::string line;
  if (!std::getline(in, line)) throw DataError("windows CSV: missing header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_csv_line(line);
    if (fields.size() != 4 + kWindowLen) {
      throw DataError("windows CSV: line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields");
    }
    SignalWindow w;
    w.source.file_index = static_cast<int>(parse_int(fields[0]));
    w.source.channel = static_cast<int>(parse_int(fields[1]));
    w.source.offset = parse_int(fields[2]);
    w.label = condition_from_string(fields[3]);
    w.values.resize(kWindowLen);
    for (std::size_t i = 0; i < kWindowLen; ++i) w.values[i] = parse_double(fields[4 + i]);
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<SignalWindow> read_windows_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open windows CSV: " + path.string());
  return read_windows_csv(in);
}

void write_ims_file(const RawRecording& recording, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write recording: " + path.string());
  for (std::size_t r = 0; r < recording.samples.rows; ++r) {
    for (std::size_t c = 0; c < recording.samples.cols; ++c) {
      if (c) out << '\t';
      out << fmt_double(recording.samples(r, c));
    }
    out << "\n";
  }
}

std::uint64_t fingerprint_windows(const std::vector<SignalWindow>& windows) {
  Fnv1a64 h;
  for (const auto& w : windows) {
    h.update(to_string(w.label));
    h.update(static_cast<std::int64_t>(w.source.file_index));
    h.update(static_cast<std::int64_t>(w.source.channel));
    h.update(w.source.offset);
    for (double v : w.values) h.update(v);
  }
  return h.digest();
}

}  // namespace condmon::data
