#include "fixtures.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unistd.h>

#include "stutterkit/csv.hpp"
#include "stutterkit/random.hpp"

namespace fixtures {

using namespace stutterkit;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

AudioClip tone(const std::vector<double>& freqs_hz, double seconds, double amp, double noise, std::uint64_t seed) {
  AudioClip clip;
  const auto n = static_cast<std::size_t>(std::llround(seconds * kSampleRate));
  clip.samples.resize(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double f : freqs_hz) s += amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / kSampleRate);
    if (noise > 0.0) s += noise * rng.uniform(-1.0, 1.0);
    clip.samples[i] = static_cast<float>(s);
  }
  return clip;
}

double class_frequency(Label label) {
  static constexpr double kFreq[kNumClasses] = {440.0, 870.0, 1510.0, 2330.0, 3370.0, 5050.0};
  return kFreq[index_of(label)];
}

AudioClip coded_clip(const LabelVector& labels, double seconds, double shift_hz, std::uint64_t seed) {
  std::vector<double> freqs;
  for (Label l : kAllLabels) {
    if (labels.test(l)) freqs.push_back(class_frequency(l) + shift_hz);
  }
  return tone(freqs, seconds, 0.15, 0.01, seed);
}

ModelConfig tiny_model(nn::NormPlacement placement, nn::Activation act, int n_layers) {
  ModelConfig c;
  c.d_model = 8;
  c.n_layers = n_layers;
  c.n_heads = 2;
  c.d_ffn = 16;
  c.n_mels = 4;
  c.max_positions = 16;
  c.d_proj = 4;
  c.norm_placement = placement;
  c.ffn_activation = act;
  return c;
}

Matrix random_features(int n_mels, int frames, std::uint64_t seed, double scale) {
  Rng rng(seed);
  Matrix m(n_mels, frames);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.uniform(-1.0, 1.0);
  return m;
}

oracle::Grid to_grid(const Matrix& m) {
  oracle::Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
  }
  return g;
}

ClipRecord record(const std::string& id, const std::string& episode, const std::string& speaker, Label label,
                  double duration_s, Source source) {
  ClipRecord r;
  r.clip_id = id;
  r.episode_id = episode;
  r.speaker_id = speaker;
  r.duration_s = duration_s;
  r.source = source;
  r.votes[index_of(label)] = 3;
  return r;
}

Corpus write_corpus(const fs::path& dir) {
  using L = Label;
  Corpus c;
  c.audio_dir = dir / "clips";
  fs::create_directories(c.audio_dir);

  struct SpeakerPlan {
    std::string speaker;
    Source source;
    std::vector<Label> labels;
  };
  std::vector<SpeakerPlan> plans;
  for (int s = 1; s <= 4; ++s) {
    plans.push_back({"s0" + std::to_string(s), Source::sep28k,
                     {L::block, L::interjection, L::prolongation, L::no_stuttered_words, L::no_stuttered_words,
                      L::no_stuttered_words}});
  }
  for (int s = 5; s <= 8; ++s) {
    plans.push_back({"s0" + std::to_string(s), Source::sep28k,
                     {L::sound_rep, L::word_rep, L::interjection, L::no_stuttered_words}});
  }
  for (int s = 1; s <= 2; ++s) {
    plans.push_back({"fb" + std::to_string(s), Source::fluencybank,
                     {L::block, L::word_rep, L::no_stuttered_words, L::no_stuttered_words}});
  }

  std::uint64_t seed = 1;
  for (std::size_t p = 0; p < plans.size(); ++p) {
    const auto& plan = plans[p];
    for (std::size_t i = 0; i < plan.labels.size(); ++i) {
      const std::string id = plan.speaker + "_" + std::to_string(i);
      ClipRecord r = record(id, "ep_" + plan.speaker, plan.speaker, plan.labels[i], 3.0, plan.source);
      r.votes[(index_of(plan.labels[i]) + 1) % kNumClasses] = 1;  // a dissenting minority vote
      c.records.push_back(r);
      AudioClip clip = coded_clip(LabelVector::single(plan.labels[i]), 3.0 + 0.25 * static_cast<double>(i % 3),
                                  7.0 * static_cast<double>(p), seed++);
      save_wav(c.audio_dir / (id + ".wav"), clip);
    }
  }

  // Rows that cleaning must reject.
  c.records.push_back(record("short_0", "ep_s01", "s01", L::block, 2.9));
  ClipRecord crowd = record("crowd_0", "ep_s01", "s01", L::interjection);
  crowd.n_speakers = 2;
  c.records.push_back(crowd);
  ClipRecord music = record("music_0", "ep_s02", "s02", L::no_stuttered_words);
  music.votes[index_of(L::no_stuttered_words)] = 0;
  music.other_votes["Music"] = 3;
  c.records.push_back(music);
  ClipRecord split = record("split_0", "ep_s02", "s02", L::block);
  split.votes[index_of(L::block)] = 2;
  split.votes[index_of(L::word_rep)] = 1;
  c.records.push_back(split);

  c.inventory = dir / "inventory.csv";
  write_csv(c.inventory, to_inventory_table(c.records));
  return c;
}

std::vector<ClipRecord> five_label_speaker() {
  std::vector<ClipRecord> out;
  for (Label l : kAllLabels) {
    if (!is_disfluency(l)) continue;
    out.push_back(record("c_" + std::string(label_name(l)), "ep1", "spk1", l));
  }
  return out;
}

std::vector<ClipRecord> random_records(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<ClipRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string speaker = "spk" + std::to_string(rng.below(4));
    const std::string episode = "ep" + std::to_string(rng.below(3));
    const Label label = kAllLabels[rng.below(kNumClasses)];
    out.push_back(record("r" + std::to_string(i), episode, speaker, label, 3.0 + rng.uniform()));
  }
  return out;
}

AudioLoader synthetic_loader(const std::vector<ClipRecord>& records) {
  std::map<std::string, Label> labels;
  for (const auto& r : records) {
    for (Label l : kAllLabels) {
      if (r.votes_for(l) >= 3) labels[r.clip_id] = l;
    }
  }
  return [labels](const std::string& id) {
    const std::uint64_t h = fnv1a64(id);
    const double seconds = 2.5 + 0.5 * static_cast<double>(h % 4);
    AudioClip clip = coded_clip(LabelVector::single(labels.at(id)), seconds, 0.0, h);
    clip.clip_id = id;
    return clip;
  };
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::map<std::string, std::string> snapshot(const fs::path& dir, const std::string& exclude_name) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == exclude_name) continue;
    out[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return out;
}

}  // namespace fixtures
