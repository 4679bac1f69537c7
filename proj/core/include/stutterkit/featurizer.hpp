#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "stutterkit/fft.hpp"
#include "stutterkit/tensor.hpp"
#include "stutterkit/wav.hpp"

namespace stutterkit {

/// Framing, filterbank and normalisation settings. Defaults give 25 ms Hann
/// windows (400 samples) every 10 ms (160 samples) over 6 s chunks, 80 mel
/// bins spanning 0 to 8 kHz.
struct FeaturizerConfig {
  int sample_rate = kSampleRate;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int n_mels = 80;
  double chunk_length_s = 6.0;
  double f_min = 0.0;
  double f_max = 8000.0;
  double log_floor = 1e-10;
  double clamp_range = 8.0;
  double affine_shift = 4.0;
  double affine_scale = 4.0;

  int n_fft() const;
  int hop() const;
  std::size_t chunk_samples() const;
  std::size_t chunk_frames() const;

  /// Throws ConfigMismatch for inconsistent values.
  void validate() const;

  /// Canonical JSON text; its SHA-256 is the config hash.
  std::string to_json() const;
  static FeaturizerConfig from_json(const std::string& text);
  std::string digest() const;

  bool operator==(const FeaturizerConfig&) const = default;
};

/// [n_mels x n_frames] log-mel energies.
struct LogMelSpectrogram {
  Matrix values;
  std::string config_hash;
  bool normalized = false;

  Eigen::Index n_mels() const { return values.rows(); }
  Eigen::Index n_frames() const { return values.cols(); }
};

/// Number of hop-spaced frames for a centre-padded signal of n_samples.
std::size_t frame_count(std::size_t n_samples, int hop);

/// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

/// Slaney-style mel scale: linear below 1 kHz, logarithmic above.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Centre frequency (Hz) of each mel filter.
std::vector<double> mel_center_frequencies(int n_mels, double f_min, double f_max);

/// [n_mels x (n_fft/2+1)] triangular filters with unit-area normalisation.
Matrix mel_filterbank(int n_mels, int n_fft, int sample_rate, double f_min, double f_max);

/// Pads with zeros or truncates to exactly n samples.
std::vector<double> fit_to_length(const std::vector<float>& samples, std::size_t n);

class Featurizer {
 public:
  explicit Featurizer(FeaturizerConfig cfg = {});

  const FeaturizerConfig& config() const noexcept { return cfg_; }
  const Matrix& filterbank() const noexcept { return filters_; }

  /// Raw natural-log mel energies of the clip fitted to the chunk length.
  LogMelSpectrogram log_mel(const AudioClip& clip) const;

  /// log_mel followed by normalize.
  LogMelSpectrogram operator()(const AudioClip& clip) const;

 private:
  FeaturizerConfig cfg_;
  std::vector<double> window_;
  Matrix filters_;
  RealFft fft_;
  std::string hash_;
};

LogMelSpectrogram log_mel(const AudioClip& clip, const FeaturizerConfig& cfg);

/// Clamps from below at (max - clamp_range), then maps x -> (x + shift) / scale.
LogMelSpectrogram normalize(LogMelSpectrogram spec, const FeaturizerConfig& cfg);

/// Dump layout: one line of JSON {"n_mels","n_frames","normalized","config"},
/// a '\n', then n_mels*n_frames little-endian f32 values in row-major order.
void write_spectrogram(const std::filesystem::path& path, const LogMelSpectrogram& spec,
                       const FeaturizerConfig& cfg);
LogMelSpectrogram read_spectrogram(const std::filesystem::path& path);

}  // namespace stutterkit
