#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "stutterkit/curation.hpp"
#include "stutterkit/model_config.hpp"
#include "stutterkit/tensor.hpp"
#include "stutterkit/wav.hpp"

namespace fixtures {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "stutterkit");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

/// Sum of sines at amplitude amp each, plus optional seeded white noise.
stutterkit::AudioClip tone(const std::vector<double>& freqs_hz, double seconds, double amp = 0.2,
                           double noise = 0.0, std::uint64_t seed = 0);

/// Frequency used to encode each class in synthetic clips.
double class_frequency(stutterkit::Label label);

/// One tone per set bit, shifted by `shift_hz`.
stutterkit::AudioClip coded_clip(const stutterkit::LabelVector& labels, double seconds, double shift_hz = 0.0,
                                 std::uint64_t seed = 0);

/// d_model 8, 2 heads, ffn 16, n_mels 4, d_proj 4.
stutterkit::ModelConfig tiny_model(stutterkit::nn::NormPlacement placement = stutterkit::nn::NormPlacement::pre,
                                   stutterkit::nn::Activation act = stutterkit::nn::Activation::gelu,
                                   int n_layers = 2);

stutterkit::Matrix random_features(int n_mels, int frames, std::uint64_t seed, double scale = 1.0);
oracle::Grid to_grid(const stutterkit::Matrix& m);

stutterkit::ClipRecord record(const std::string& id, const std::string& episode, const std::string& speaker,
                              stutterkit::Label label, double duration_s = 3.0,
                              stutterkit::Source source = stutterkit::Source::sep28k);

/// Small inventory spanning all four speaker groups plus rejectable rows.
struct Corpus {
  fs::path inventory;
  fs::path audio_dir;
  std::vector<stutterkit::ClipRecord> records;
};
Corpus write_corpus(const fs::path& dir);

/// One speaker, one episode, one clip per disfluency label.
std::vector<stutterkit::ClipRecord> five_label_speaker();

/// Random cleaned records over a few speakers and episodes.
std::vector<stutterkit::ClipRecord> random_records(std::uint64_t seed, std::size_t n);

/// Loader synthesizing a coded clip per record, 2.5 to 4 s long.
stutterkit::AudioLoader synthetic_loader(const std::vector<stutterkit::ClipRecord>& records);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& text);

/// Relative path -> contents for every file under dir, minus excluded names.
std::map<std::string, std::string> snapshot(const fs::path& dir, const std::string& exclude_name = "run_manifest.json");

}  // namespace fixtures
