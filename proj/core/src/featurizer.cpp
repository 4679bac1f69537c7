#include "stutterkit/featurizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "stutterkit/digest.hpp"
#include "stutterkit/error.hpp"

namespace stutterkit {

static_assert(std::endian::native == std::endian::little, "dump and checkpoint I/O assume a little-endian host");

namespace {

constexpr double kMelLinearBreakHz = 1000.0;
constexpr double kMelHzPerUnit = 200.0 / 3.0;
constexpr double kMelBreak = kMelLinearBreakHz / kMelHzPerUnit;  // 15
const double kMelLogStep = std::log(6.4) / 27.0;

int round_to_int(double v) { return static_cast<int>(std::lround(v)); }

}  // namespace

int FeaturizerConfig::n_fft() const { return round_to_int(window_ms * sample_rate / 1000.0); }
int FeaturizerConfig::hop() const { return round_to_int(hop_ms * sample_rate / 1000.0); }
std::size_t FeaturizerConfig::chunk_samples() const {
  return static_cast<std::size_t>(std::llround(chunk_length_s * sample_rate));
}
std::size_t FeaturizerConfig::chunk_frames() const { return frame_count(chunk_samples(), hop()); }

void FeaturizerConfig::validate() const {
  if (sample_rate != kSampleRate) throw Error(Errc::config_mismatch, "sample_rate must be 16000");
  if (n_mels < 1) throw Error(Errc::config_mismatch, "n_mels must be >= 1");
  if (n_fft() < 2 || hop() < 1) throw Error(Errc::config_mismatch, "window/hop too small");
  if (static_cast<std::size_t>(n_fft()) > chunk_samples()) {
    throw Error(Errc::config_mismatch, "n_fft " + std::to_string(n_fft()) + " exceeds chunk of " +
                                           std::to_string(chunk_samples()) + " samples");
  }
  if (!(f_max > f_min) || f_min < 0.0 || f_max > sample_rate / 2.0) {
    throw Error(Errc::config_mismatch, "mel band must satisfy 0 <= f_min < f_max <= Nyquist");
  }
  if (!(log_floor > 0.0)) throw Error(Errc::config_mismatch, "log_floor must be positive");
  if (!(clamp_range > 0.0) || !(affine_scale > 0.0)) {
    throw Error(Errc::config_mismatch, "clamp_range and affine_scale must be positive");
  }
}

std::string FeaturizerConfig::to_json() const {
  nlohmann::ordered_json j;
  j["sample_rate"] = sample_rate;
  j["window_ms"] = window_ms;
  j["hop_ms"] = hop_ms;
  j["n_mels"] = n_mels;
  j["chunk_length_s"] = chunk_length_s;
  j["f_min"] = f_min;
  j["f_max"] = f_max;
  j["log_floor"] = log_floor;
  j["clamp_range"] = clamp_range;
  j["affine_shift"] = affine_shift;
  j["affine_scale"] = affine_scale;
  return j.dump();
}

FeaturizerConfig FeaturizerConfig::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  FeaturizerConfig c;
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  c.window_ms = j.value("window_ms", c.window_ms);
  c.hop_ms = j.value("hop_ms", c.hop_ms);
  c.n_mels = j.value("n_mels", c.n_mels);
  c.chunk_length_s = j.value("chunk_length_s", c.chunk_length_s);
  c.f_min = j.value("f_min", c.f_min);
  c.f_max = j.value("f_max", c.f_max);
  c.log_floor = j.value("log_floor", c.log_floor);
  c.clamp_range = j.value("clamp_range", c.clamp_range);
  c.affine_shift = j.value("affine_shift", c.affine_shift);
  c.affine_scale = j.value("affine_scale", c.affine_scale);
  return c;
}

std::string FeaturizerConfig::digest() const { return sha256_hex(to_json()); }

std::size_t frame_count(std::size_t n_samples, int hop) {
  return hop > 0 ? n_samples / static_cast<std::size_t>(hop) : 0;
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

double hz_to_mel(double hz) {
  if (hz < kMelLinearBreakHz) return hz / kMelHzPerUnit;
  return kMelBreak + std::log(hz / kMelLinearBreakHz) / kMelLogStep;
}

double mel_to_hz(double mel) {
  if (mel < kMelBreak) return mel * kMelHzPerUnit;
  return kMelLinearBreakHz * std::exp(kMelLogStep * (mel - kMelBreak));
}

namespace {

// n_mels + 2 band edges equally spaced in mel.
std::vector<double> mel_edges_hz(int n_mels, double f_min, double f_max) {
  const double lo = hz_to_mel(f_min);
  const double hi = hz_to_mel(f_max);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[static_cast<std::size_t>(i)] = mel_to_hz(lo + (hi - lo) * i / (n_mels + 1));
  }
  return edges;
}

}  // namespace

std::vector<double> mel_center_frequencies(int n_mels, double f_min, double f_max) {
  const auto edges = mel_edges_hz(n_mels, f_min, f_max);
  return {edges.begin() + 1, edges.end() - 1};
}

Matrix mel_filterbank(int n_mels, int n_fft, int sample_rate, double f_min, double f_max) {
  const int n_bins = n_fft / 2 + 1;
  const auto edges = mel_edges_hz(n_mels, f_min, f_max);
  Matrix fb = Matrix::Zero(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[static_cast<std::size_t>(m)];
    const double center = edges[static_cast<std::size_t>(m) + 1];
    const double right = edges[static_cast<std::size_t>(m) + 2];
    const double area_norm = 2.0 / (right - left);
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      const double rising = (f - left) / (center - left);
      const double falling = (right - f) / (right - center);
      fb(m, k) = std::max(0.0, std::min(rising, falling)) * area_norm;
    }
  }
  return fb;
}

std::vector<double> fit_to_length(const std::vector<float>& samples, std::size_t n) {
  std::vector<double> out(n, 0.0);
  const std::size_t m = std::min(n, samples.size());
  std::copy_n(samples.begin(), m, out.begin());
  return out;
}

Featurizer::Featurizer(FeaturizerConfig cfg)
    : cfg_((cfg.validate(), cfg)),
      window_(hann_window(cfg_.n_fft())),
      filters_(mel_filterbank(cfg_.n_mels, cfg_.n_fft(), cfg_.sample_rate, cfg_.f_min, cfg_.f_max)),
      fft_(cfg_.n_fft()),
      hash_(cfg_.digest()) {}

LogMelSpectrogram Featurizer::log_mel(const AudioClip& clip) const {
  if (clip.samples.empty()) throw Error(Errc::empty_clip, "clip '" + clip.clip_id + "' has no samples");
  if (clip.sample_rate != cfg_.sample_rate) {
    throw Error(Errc::config_mismatch, "clip sample rate " + std::to_string(clip.sample_rate) +
                                           " does not match featurizer");
  }

  const std::size_t n = cfg_.chunk_samples();
  const std::vector<double> x = fit_to_length(clip.samples, n);

  // Centre framing: reflect-pad n_fft/2 on both sides.
  const int n_fft = cfg_.n_fft();
  const std::size_t pad = static_cast<std::size_t>(n_fft / 2);
  std::vector<double> padded(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    padded[i] = x[std::min(pad - i, n - 1)];
    padded[pad + n + i] = x[n >= i + 2 ? n - 2 - i : 0];
  }
  std::copy(x.begin(), x.end(), padded.begin() + static_cast<std::ptrdiff_t>(pad));

  const std::size_t frames = frame_count(n, cfg_.hop());
  Matrix power(fft_.bins(), static_cast<Eigen::Index>(frames));
  std::vector<double> frame(static_cast<std::size_t>(n_fft));
  std::vector<double> spectrum(static_cast<std::size_t>(fft_.bins()));
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * static_cast<std::size_t>(cfg_.hop());
    for (int i = 0; i < n_fft; ++i) {
      frame[static_cast<std::size_t>(i)] = padded[start + static_cast<std::size_t>(i)] * window_[static_cast<std::size_t>(i)];
    }
    fft_.power(frame, spectrum);
    for (int k = 0; k < fft_.bins(); ++k) power(k, static_cast<Eigen::Index>(t)) = spectrum[static_cast<std::size_t>(k)];
  }

  LogMelSpectrogram out;
  out.values = filters_ * power;
  const double floor = cfg_.log_floor;
  out.values = out.values.unaryExpr([floor](double e) { return std::log(std::max(e, floor)); });
  out.config_hash = hash_;
  return out;
}

LogMelSpectrogram Featurizer::operator()(const AudioClip& clip) const {
  return normalize(log_mel(clip), cfg_);
}

LogMelSpectrogram log_mel(const AudioClip& clip, const FeaturizerConfig& cfg) {
  return Featurizer(cfg).log_mel(clip);
}

LogMelSpectrogram normalize(LogMelSpectrogram spec, const FeaturizerConfig& cfg) {
  if (spec.values.size() == 0) return spec;
  const double top_raw = spec.values.maxCoeff();
  const double lower = top_raw - cfg.clamp_range;
  const double shift = cfg.affine_shift;
  const double scale = cfg.affine_scale;
  const double top = (top_raw + shift) / scale;
  const double span = cfg.clamp_range / scale;
  // Rounding may push the clamped floor one ulp too low; nudge it so the
  // computed spread never exceeds clamp_range / scale.
  double floor = (lower + shift) / scale;
  while (top - floor > span) floor = std::nextafter(floor, top);
  spec.values = spec.values.unaryExpr(
      [=](double v) { return std::clamp((std::max(v, lower) + shift) / scale, floor, top); });
  spec.normalized = true;
  return spec;
}

void write_spectrogram(const std::filesystem::path& path, const LogMelSpectrogram& spec,
                       const FeaturizerConfig& cfg) {
  nlohmann::ordered_json header;
  header["n_mels"] = spec.n_mels();
  header["n_frames"] = spec.n_frames();
  header["normalized"] = spec.normalized;
  header["config"] = nlohmann::ordered_json::parse(cfg.to_json());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  const std::string text = header.dump();
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.put('\n');
  std::vector<float> blob(static_cast<std::size_t>(spec.values.size()));
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) {
    blob[static_cast<std::size_t>(i)] = static_cast<float>(spec.values.data()[i]);
  }
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size() * sizeof(float)));
  if (!out) throw Error(Errc::io_error, "short write to " + path.string());
}

LogMelSpectrogram read_spectrogram(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::corrupt_file, path.string() + ": missing header");
  Eigen::Index rows = 0, cols = 0;
  bool normalized = false;
  std::string config_hash;
  try {
    const auto header = nlohmann::json::parse(line);
    rows = header.at("n_mels").get<Eigen::Index>();
    cols = header.at("n_frames").get<Eigen::Index>();
    normalized = header.at("normalized").get<bool>();
    config_hash = FeaturizerConfig::from_json(header.at("config").dump()).digest();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::corrupt_file, path.string() + ": bad header: " + e.what());
  }
  if (rows < 1 || cols < 0) throw Error(Errc::corrupt_file, path.string() + ": bad matrix shape");
  std::vector<float> blob(static_cast<std::size_t>(rows * cols));
  in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(blob.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(blob.size() * sizeof(float))) {
    throw Error(Errc::corrupt_file, path.string() + ": truncated matrix");
  }
  LogMelSpectrogram spec;
  spec.values.resize(rows, cols);
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) spec.values.data()[i] = blob[static_cast<std::size_t>(i)];
  spec.normalized = normalized;
  spec.config_hash = std::move(config_hash);
  return spec;
}

}  // namespace stutterkit
