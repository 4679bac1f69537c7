// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "harness.hpp"
#include "oracle.hpp"
#include "stutterkit/cli.hpp"
#include "stutterkit/curation.hpp"
#include "stutterkit/evaluator.hpp"
#include "stutterkit/featurizer.hpp"
#include "stutterkit/freeze.hpp"
#include "stutterkit/layers.hpp"
#include "stutterkit/random.hpp"
#include "stutterkit/registry.hpp"
#include "stutterkit/trainer.hpp"

using namespace stutterkit;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

struct Criterion {
  std::string id;
  std::string title;
  double budget_s;
  std::function<Verdict()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int call_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << "  cli " << args.front() << " exited " << code << ": " << err.str();
  return code;
}

// ---- 1: parameter counts ----------------------------------------------------

Verdict parameter_counts() {
  Verdict v;
  const std::map<std::string, std::pair<std::size_t, std::string>> expected = {
      {"UnFrz0-5", {20'723'462, "20.72"}},
      {"UnFrz0-5+FrzFE", {19'045'126, "19.05"}},
      {"Frz0-2", {11'267'846, "11.27"}},
      {"Frz0-2+FrzFE", {9'589'510, "9.59"}},
      {"Frz0-4+FrzFE", {3'285'766, "3.29"}},
  };
  std::ostringstream out, err;
  std::vector<std::string> args = {"params"};
  for (const auto& [spec, want] : expected) {
    args.push_back("--freeze");
    args.push_back(spec);
  }
  v.require(cli::run(args, out, err) == 0, "params exited nonzero");
  const std::string text = out.str();
  const ModelConfig cfg;
  for (const auto& [spec, want] : expected) {
    const std::size_t n = trainable_arithmetic(cfg, parse_freeze_spec(spec, cfg.n_layers));
    v.require(n == want.first, spec + " gives " + std::to_string(n));
    v.require(fmt("%.2f", static_cast<double>(n) / 1e6) == want.second, spec + " rounds differently");
    // The printed row carries both the grouped integer and the rounded millions.
    bool row_ok = false;
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
      if (line.rfind(spec + " ", 0) == 0) {
        row_ok = line.find(cli::group_digits(want.first)) != std::string::npos &&
                 line.find(want.second) != std::string::npos;
      }
    }
    v.require(row_ok, "printed row for " + spec);
  }
  v.detail = v.pass ? "5 configurations exact" : v.detail;
  return v;
}

// ---- 2a: gradients ----------------------------------------------------------

Verdict gradients() {
  Verdict v;
  double worst = 0.0;
  std::size_t tensors = 0;
  for (auto placement : {nn::NormPlacement::pre, nn::NormPlacement::post}) {
    for (auto act : {nn::Activation::gelu, nn::Activation::relu}) {
      const auto cfg = fixtures::tiny_model(placement, act, 2);
      for (const auto& t : fixtures::gradient_check(cfg, 42)) {
        ++tensors;
        worst = std::max(worst, t.rel_error);
        v.require(t.rel_error < 1e-4, to_string(placement) + "/" + to_string(act) + " " + t.name + " " +
                                          fmt("%.2e", t.rel_error));
      }
    }
  }
  v.require(tensors > 0, "no tensors checked");
  if (v.pass) v.detail = std::to_string(tensors) + " tensors, worst relative error " + fmt("%.2e", worst);
  return v;
}

// ---- 2b: freeze identity ----------------------------------------------------

Verdict freeze_identity() {
  Verdict v;
  std::size_t frozen = 0;
  for (const auto& spec : reference_freeze_specs()) {
    const auto r = fixtures::freeze_identity(spec, 100);
    frozen += r.frozen_tensors;
    v.require(r.frozen_changed == 0, spec + ": " + std::to_string(r.frozen_changed) + " frozen tensors moved");
    v.require(r.trainable_unchanged == 0, spec + ": " + std::to_string(r.trainable_unchanged) + " trainable idle");
  }
  if (v.pass) {
    v.detail = std::to_string(reference_freeze_specs().size()) + " configurations, " + std::to_string(frozen) +
               " frozen tensors byte-identical after 100 steps";
  }
  return v;
}

// ---- 2c: overfit ------------------------------------------------------------

Verdict overfit() {
  Verdict v;
  FeaturizerConfig features;
  features.chunk_length_s = 1.0;
  const Featurizer featurizer(features);

  ModelConfig cfg;
  cfg.d_model = 64;
  cfg.n_heads = 4;
  cfg.d_ffn = 256;
  cfg.d_proj = 32;
  cfg.max_positions = 50;

  using L = Label;
  const std::vector<std::vector<L>> sets = {
      {L::block, L::interjection}, {L::prolongation, L::sound_rep}, {L::word_rep, L::block},
      {L::interjection, L::prolongation}, {L::sound_rep, L::word_rep}, {L::no_stuttered_words},
      {L::block, L::sound_rep}, {L::interjection, L::word_rep}};
  std::vector<Example> data;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    LabelVector labels;
    for (L l : sets[i]) labels.set(l);
    Example ex;
    ex.id = "tone" + std::to_string(i);
    ex.labels = labels;
    ex.features = featurizer(fixtures::coded_clip(labels, 1.0, 5.0 * static_cast<double>(i), i + 1)).values;
    data.push_back(std::move(ex));
  }

  ParameterRegistry registry = init_registry(cfg, 1);
  TrainConfig train;
  train.learning_rate = 1e-3;
  TrainState state = TrainState::init(registry, 1);
  Batch batch;
  for (const auto& ex : data) batch.push_back(&ex);

  Evaluation ev;
  std::uint64_t reached = 0;
  for (int step = 1; step <= 300; ++step) {
    train_step(state, registry, cfg, batch, train);
    if (step % 10 == 0) {
      ev = evaluate(data, registry, cfg, 0.5);
      if (ev.report.micro_f1 == 1.0 && ev.mean_loss < 0.05) {
        reached = state.step;
        break;
      }
    }
  }
  v.require(reached > 0, "after 300 steps micro F1 " + fmt("%.4f", ev.report.micro_f1) + ", loss " +
                             fmt("%.4f", ev.mean_loss));
  if (v.pass) {
    v.detail = "micro F1 1.0, loss " + fmt("%.4f", ev.mean_loss) + " at step " + std::to_string(reached) + ", " +
               std::to_string(parameter_arithmetic(cfg).total) + " parameters";
  }
  return v;
}

// ---- 3: featurizer ----------------------------------------------------------

Verdict featurizer() {
  Verdict v;
  const Featurizer fz;
  const auto centers = oracle::mel_centers(80, 0.0, 8000.0);
  int hits = 0;
  for (int m = 40; m < 80; m += 4) {
    const auto spec = fz.log_mel(fixtures::tone({centers[static_cast<std::size_t>(m)]}, 1.0, 0.5));
    Eigen::Index best = 0;
    spec.values.rowwise().mean().maxCoeff(&best);
    hits += best == m ? 1 : 0;
    v.require(best == m, "tone at filter " + std::to_string(m) + " peaked at " + std::to_string(best));
  }

  double worst = 0.0;
  RealFft fft(400);
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> frame(400);
    for (auto& x : frame) x = rng.uniform(-1.0, 1.0);
    std::vector<double> power(static_cast<std::size_t>(fft.bins()));
    fft.power(frame, power);
    const auto ref = oracle::dft_power(frame);
    for (std::size_t k = 0; k < ref.size(); ++k) worst = std::max(worst, std::abs(std::sqrt(power[k]) - std::sqrt(ref[k])));
  }
  v.require(worst < 1e-6, "FFT magnitude error " + fmt("%.2e", worst));

  const auto six = fz(fixtures::tone({440.0}, 6.0));
  v.require(six.n_frames() == 600, "6 s clip gave " + std::to_string(six.n_frames()) + " frames");
  Matrix w1 = Matrix::Constant(8, 80 * 3, 0.01), w2 = Matrix::Constant(8, 8 * 3, 0.01);
  const std::vector<double> b(8, 0.0);
  const Matrix stem = nn::conv_stem(six.values, {w1, b.data(), w2, b.data()}, nullptr);
  v.require(stem.rows() == 300, "stem gave " + std::to_string(stem.rows()) + " positions");

  const FeaturizerConfig cfg;
  double widest = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng r(seed);
    LogMelSpectrogram s;
    s.values = fixtures::random_features(1 + static_cast<int>(r.below(80)), 1 + static_cast<int>(r.below(64)),
                                         seed, r.uniform(0.1, 40.0));
    const auto n = normalize(s, cfg);
    widest = std::max(widest, n.values.maxCoeff() - n.values.minCoeff());
  }
  v.require(widest <= 2.0, "normalized range " + fmt("%.6f", widest));
  if (v.pass) {
    v.detail = std::to_string(hits) + "/10 tone bins, FFT error " + fmt("%.1e", worst) +
               ", 600 frames -> 300 positions, widest normalized range " + fmt("%.4f", widest);
  }
  return v;
}

// ---- 4: metrics -------------------------------------------------------------

Verdict metrics() {
  Verdict v;
  Rng rng(2025);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    const double pt = rng.uniform(), pp = rng.uniform();
    std::vector<LabelVector> t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        t[i].set(c, rng.uniform() < pt);
        p[i].set(c, rng.uniform() < pp);
      }
    }
    const auto r = f1_report(p, t);
    const auto b = oracle::brute_f1(p, t, kNumClasses);
    bool same = true;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const auto& k = r.per_class_counts[c];
      same &= k.tp == b.tp[c] && k.fp == b.fp[c] && k.fn == b.fn[c] && k.support == b.support[c];
      same &= std::abs(r.per_class_f1[c] - b.f1[c]) < 1e-12;
    }
    same &= std::abs(r.micro_f1 - b.micro) < 1e-12 && std::abs(r.macro_f1 - b.macro) < 1e-12 &&
            std::abs(r.weighted_f1 - b.weighted) < 1e-12;
    mismatches += same ? 0 : 1;
  }
  v.require(mismatches == 0, std::to_string(mismatches) + " of 1000 sets disagree");

  const auto bits = [](std::initializer_list<int> b) {
    LabelVector out;
    std::size_t i = 0;
    for (int x : b) out.set(i++, x != 0);
    return out;
  };
  const std::vector<LabelVector> preds = {bits({1, 0, 0}), bits({0, 1, 0})};
  const std::vector<LabelVector> targets = {bits({1, 0, 1}), bits({0, 1, 0})};
  const auto hand = f1_report(preds, targets, 0.5, 3);
  v.require(std::abs(hand.macro_f1 - 0.6667) < 1e-4, "hand macro " + fmt("%.6f", hand.macro_f1));
  v.require(std::abs(hand.micro_f1 - 0.8) < 1e-4, "hand micro " + fmt("%.6f", hand.micro_f1));
  if (v.pass) {
    v.detail = "1000/1000 random sets exact; hand case macro " + fmt("%.4f", hand.macro_f1) + ", micro " +
               fmt("%.4f", hand.micro_f1);
  }
  return v;
}

// ---- 5: curation ------------------------------------------------------------

Verdict curation() {
  Verdict v;
  const auto recs = fixtures::five_label_speaker();
  const auto clips = pair(recs, fixtures::synthetic_loader(recs));
  v.require(clips.size() == 20, "five-label fixture gave " + std::to_string(clips.size()) + " pairs");
  std::map<std::string, std::size_t> counts;
  for (const auto& c : clips) ++counts[c.combination_key];
  std::size_t bad_len = 0;
  for (const auto& c : clips) {
    bad_len += c.samples.size() == 96000 ? 0 : 1;
    v.require(counts[combination_key(c.right_label, c.left_label)] == counts[c.combination_key],
              "asymmetric " + c.combination_key);
  }

  fixtures::TempDir dir("stutterkit-accept");
  const auto corpus = fixtures::write_corpus(dir.path());
  const auto cleaned = clean(corpus.records).kept;
  const auto pairs = balance_no_stutter(plan_pairs(cleaned), 1);
  const auto groups = assign_speaker_groups(cleaned);
  const auto loader = directory_loader(corpus.audio_dir);
  for (const auto& spec : pairs) {
    bad_len += concatenate(spec, loader(spec.left_clip_id), loader(spec.right_clip_id)).samples.size() == 96000 ? 0 : 1;
  }
  v.require(bad_len == 0, std::to_string(bad_len) + " clips not 96000 samples");

  using G = SpeakerGroup;
  const std::map<std::string, std::array<std::vector<G>, 3>> table = {
      {"SEP-28k-E", {{{G::dominant4}, {G::ds_set1}, {G::ds_set2}}}},
      {"SEP-28k-T", {{{G::ds_set1}, {G::ds_set2}, {G::dominant4}}}},
      {"SEP-28k-D", {{{G::ds_set2}, {G::ds_set1}, {G::dominant4}}}},
      {"SEP-28k-E-merged", {{{G::dominant4, G::ds_set1}, {G::ds_set2}, {G::fluencybank}}}},
      {"SEP-28k-T-merged", {{{G::ds_set1, G::ds_set2}, {G::dominant4}, {G::fluencybank}}}},
  };
  std::size_t leaks = 0;
  for (const auto& [name, want] : table) {
    const auto& plan = split_plan(name);
    v.require(plan.train == want[0] && plan.val == want[1] && plan.test == want[2], name + " mapping differs");
    const auto s = build_splits(pairs, groups, plan);
    std::map<std::string, int> home;
    const Partition parts[] = {Partition::train, Partition::val, Partition::test};
    for (int k = 0; k < 3; ++k) {
      for (std::size_t i : s[parts[k]]) {
        const auto& p = pairs[i];
        const auto g = s.speaker_groups.at(p.speaker_id);
        v.require(std::find(want[static_cast<std::size_t>(k)].begin(), want[static_cast<std::size_t>(k)].end(), g) !=
                      want[static_cast<std::size_t>(k)].end(),
                  name + ": " + p.speaker_id + " in wrong partition");
        const auto [it, fresh] = home.emplace(p.speaker_id, k);
        leaks += !fresh && it->second != k ? 1 : 0;
      }
      v.require(!s[parts[k]].empty(), name + " has an empty partition");
    }
  }
  v.require(leaks == 0, std::to_string(leaks) + " speaker leaks");
  if (v.pass) {
    v.detail = "20 ordered pairs, symmetric keys; 5 plans mapped with 0 leaks; " +
               std::to_string(clips.size() + pairs.size()) + " clips of 96000 samples";
  }
  return v;
}

// ---- 6: determinism ---------------------------------------------------------

Verdict determinism() {
  Verdict v;
  fixtures::TempDir dir("stutterkit-determinism");
  const auto corpus = fixtures::write_corpus(dir / "corpus");
  const fs::path cfg = dir / "run.cfg";
  fixtures::write_file(cfg,
                       "d_model=16\nn_layers=2\nn_heads=2\nd_ffn=32\nd_proj=8\nbatch_size=4\nmax_epochs=100\n"
                       "early_stop_patience=100\nlearning_rate=0.001\n");

  const auto pipeline = [&](const std::string& tag) {
    const fs::path root = dir / tag;
    const std::string c = cfg.string();
    const std::string seed = "1234";
    bool ok = call_cli({"featurize", corpus.audio_dir.string(), (root / "features").string(), "--config", c,
                        "--seed", seed}) == 0;
    ok = ok && call_cli({"curate", "--manifest", corpus.inventory.string(), "--audio-dir",
                         corpus.audio_dir.string(), "--plan", "SEP-28k-E", "--out", (root / "curated").string(),
                         "--config", c, "--seed", seed}) == 0;
    ok = ok && call_cli({"train", "--train", (root / "curated/train.csv").string(), "--val",
                         (root / "curated/val.csv").string(), "--out", (root / "model").string(), "--freeze",
                         "UnFrz0-1", "--max-steps", "50", "--config", c, "--seed", seed}) == 0;
    ok = ok && call_cli({"eval", "--checkpoint", (root / "model/model.ckpt").string(), "--manifest",
                         (root / "curated/test.csv").string(), "--out", (root / "eval").string(), "--threshold",
                         "0.3", "--threshold", "0.5", "--threshold", "0.7", "--config", c, "--seed", seed}) == 0;
    return ok;
  };
  v.require(pipeline("a"), "first run failed");
  v.require(pipeline("b"), "second run failed");
  if (!v.pass) return v;

  const auto a = fixtures::snapshot(dir / "a");
  const auto b = fixtures::snapshot(dir / "b");
  v.require(a.size() == b.size(), "file sets differ");
  std::size_t differing = 0;
  for (const auto& [path, bytes] : a) {
    const auto it = b.find(path);
    if (it == b.end() || it->second != bytes) {
      ++differing;
      v.require(false, path + " differs");
    }
  }
  for (const char* must : {"curated/train.csv", "curated/val.csv", "curated/test.csv", "model/model.ckpt",
                           "model/history.jsonl", "eval/eval_t0.50.json", "eval/eval_t0.30.txt"}) {
    v.require(a.count(must) == 1, std::string("missing ") + must);
  }
  if (v.pass) v.detail = std::to_string(a.size()) + " files byte-identical across two seeded runs";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {"1", "parameter counts", 1.0, parameter_counts},
      {"2a", "gradient check", 120.0, gradients},
      {"2b", "freeze bit-identity", 120.0, freeze_identity},
      {"2c", "overfit smoke test", 300.0, overfit},
      {"3", "featurizer", 60.0, featurizer},
      {"4", "metric oracle", 10.0, metrics},
      {"5", "curation properties", 30.0, curation},
      {"6", "end-to-end determinism", 600.0, determinism},
  };
  std::set<std::string> only(argv + 1, argv + argc);

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && only.count(c.id) == 0) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= c.budget_s) v.require(false, "over the " + fmt("%.0f", c.budget_s) + " s budget");
    failures += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.title << " (" << fmt("%.2f", secs)
              << " s): " << v.detail << std::endl;
  }
  std::cout << (failures == 0 ? "acceptance: all criteria passed" : "acceptance: " + std::to_string(failures) +
                                                                        " criterion(s) failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
