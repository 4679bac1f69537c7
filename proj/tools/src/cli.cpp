#include "stutterkit/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "stutterkit/checkpoint.hpp"
#include "stutterkit/curation.hpp"
#include "stutterkit/digest.hpp"
#include "stutterkit/error.hpp"
#include "stutterkit/evaluator.hpp"
#include "stutterkit/featurizer.hpp"
#include "stutterkit/freeze.hpp"
#include "stutterkit/kv_config.hpp"
#include "stutterkit/model.hpp"
#include "stutterkit/random.hpp"
#include "stutterkit/registry.hpp"
#include "stutterkit/run_manifest.hpp"
#include "stutterkit/trainer.hpp"
#include "stutterkit/wav.hpp"

namespace stutterkit::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = STUTTERKIT_VERSION;
constexpr const char* kDumpExtension = ".logmel";

/// Bad invocation or unusable input; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key=value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "seed for every random stream");
}

RunConfig load_run_config(const Common& c) {
  RunConfig cfg;
  if (!c.config_path.empty()) cfg = apply_key_values(load_key_values(c.config_path));
  if (c.seed) cfg.train.seed = *c.seed;
  return cfg;
}

RunManifest start_manifest(const std::string& command, const RunConfig& cfg) {
  RunManifest m;
  m.command = command;
  m.tool_version = kVersion;
  m.config_digest = sha256_hex(to_key_values(cfg));
  m.seed = cfg.train.seed;
  m.timestamp = utc_timestamp();
  return m;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << text;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---- featurize --------------------------------------------------------------

struct FeaturizeArgs {
  Common common;
  std::string in_dir;
  std::string out_dir;
  bool skip_bad = false;
};

int cmd_featurize(const FeaturizeArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_run_config(a.common);
  if (!fs::is_directory(a.in_dir)) throw UsageError("input directory " + a.in_dir + " does not exist");

  std::vector<fs::path> wavs;
  for (const auto& entry : fs::directory_iterator(a.in_dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") wavs.push_back(entry.path());
  }
  if (wavs.empty()) throw UsageError("no WAV files in " + a.in_dir);
  std::sort(wavs.begin(), wavs.end());

  fs::create_directories(a.out_dir);
  const Featurizer featurizer(cfg.features);
  RunManifest manifest = start_manifest("featurize", cfg);
  CsvTable index;
  index.header = {"clip_id", "wav", "dump", "n_frames", "sha256"};
  std::size_t rejected = 0;

  for (const auto& wav : wavs) {
    try {
      const AudioClip clip = load_wav(wav);
      const LogMelSpectrogram spec = featurizer(clip);
      const fs::path dump = fs::path(a.out_dir) / (wav.stem().string() + kDumpExtension);
      write_spectrogram(dump, spec, cfg.features);
      const std::string digest = sha256_file(dump);
      index.rows.push_back({clip.clip_id, wav.filename().string(), dump.filename().string(),
                            std::to_string(spec.n_frames()), digest});
      manifest.add_input(wav);
      manifest.outputs.push_back({dump.string(), digest});
    } catch (const Error& e) {
      if (!a.skip_bad) {
        err << "error: " << wav.string() << ": " << e.what() << "\n";
        return kExitFailure;
      }
      ++rejected;
      err << "rejected " << wav.string() << ": " << e.what() << "\n";
    }
  }

  const fs::path index_path = fs::path(a.out_dir) / "features.csv";
  write_csv(index_path, index);
  manifest.add_output(index_path);
  manifest.save(fs::path(a.out_dir) / "run_manifest.json");
  out << "featurized " << index.rows.size() << " clip(s), rejected " << rejected << "\n";
  return kExitOk;
}

// ---- curate -----------------------------------------------------------------

struct CurateArgs {
  Common common;
  std::string manifest;
  std::string audio_dir;
  std::string plan;
  std::string out_dir;
  std::string groups;
  std::string rare_policy = "drop-list";
  bool no_balance = false;
};

int cmd_curate(const CurateArgs& a, std::ostream& out, std::ostream&) {
  const RunConfig cfg = load_run_config(a.common);
  const SplitPlan& plan = [&]() -> const SplitPlan& {
    try {
      return split_plan(a.plan);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }();

  const std::vector<ClipRecord> inventory = read_inventory(a.manifest);
  CleanOptions options;
  options.rare_policy = a.rare_policy == "frequency" ? RarePolicy::frequency : RarePolicy::drop_list;
  const CleanResult cleaned = clean(inventory, options);

  std::vector<PairSpec> pairs = plan_pairs(cleaned.kept);
  const std::size_t planned = pairs.size();
  if (!a.no_balance) pairs = balance_no_stutter(std::move(pairs), derive_seed(cfg.train.seed, "curate"));

  const std::vector<SpeakerAssignment> groups =
      a.groups.empty() ? assign_speaker_groups(cleaned.kept) : read_speaker_groups(a.groups);
  const Splits splits = build_splits(pairs, groups, plan);

  const fs::path out_dir = a.out_dir;
  const fs::path audio_out = out_dir / "audio";
  fs::create_directories(audio_out);
  RunManifest manifest = start_manifest("curate", cfg);
  manifest.add_input(a.manifest);
  if (!a.groups.empty()) manifest.add_input(a.groups);

  const AudioLoader load = directory_loader(a.audio_dir);
  for (Partition part : {Partition::train, Partition::val, Partition::test}) {
    std::vector<ManifestRow> rows;
    for (std::size_t i : splits[part]) {
      const PairSpec& spec = pairs[i];
      const MultiStutterClip clip = concatenate(spec, load(spec.left_clip_id), load(spec.right_clip_id));
      AudioClip audio;
      audio.samples = clip.samples;
      audio.clip_id = spec.left_clip_id + "__" + spec.right_clip_id;
      const fs::path wav = audio_out / pair_file_name(spec);
      save_wav(wav, audio);
      rows.push_back({"audio/" + pair_file_name(spec), spec.labels, spec.combination_key, spec.speaker_id});
    }
    const fs::path csv = out_dir / (std::string(to_string(part)) + ".csv");
    write_manifest(csv, rows);
    manifest.add_output(csv);
    out << to_string(part) << ": " << rows.size() << " clip(s) from";
    const auto& gs = part == Partition::train ? plan.train : part == Partition::val ? plan.val : plan.test;
    for (std::size_t g = 0; g < gs.size(); ++g) out << (g ? " + " : " ") << to_string(gs[g]);
    out << "\n";
  }

  const fs::path counts = out_dir / "count_report.json";
  write_text(counts, count_report_json(pairs, splits) + "\n");
  manifest.add_output(counts);
  const fs::path clean_report = out_dir / "clean_report.json";
  write_text(clean_report, cleaned.report.to_json() + "\n");
  manifest.add_output(clean_report);
  manifest.save(out_dir / "run_manifest.json");

  out << "cleaned " << cleaned.report.kept << "/" << cleaned.report.input << " clip(s); " << planned
      << " pair(s) planned, " << pairs.size() << " after balancing\n";
  return kExitOk;
}

// ---- train / eval shared ----------------------------------------------------

std::vector<Example> load_examples(const fs::path& manifest_path, const FeaturizerConfig& features) {
  const auto rows = read_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  const Featurizer featurizer(features);
  const std::string expected_hash = features.digest();
  std::vector<Example> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    const fs::path path = base / row.clip_path;
    Example ex;
    ex.id = row.clip_path;
    ex.labels = row.labels;
    if (path.extension() == kDumpExtension) {
      LogMelSpectrogram spec = read_spectrogram(path);
      if (spec.config_hash != expected_hash) {
        throw Error(Errc::config_mismatch, path.string() + " was featurized with a different configuration");
      }
      if (!spec.normalized) spec = normalize(std::move(spec), features);
      ex.features = std::move(spec.values);
    } else {
      ex.features = featurizer(load_wav(path)).values;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string train;
  std::string val;
  std::string out_dir;
  std::string freeze = "UnFrz0-5";
  std::optional<std::size_t> max_steps;
  std::optional<unsigned> threads;
  bool dry_run = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream&) {
  RunConfig cfg = load_run_config(a.common);
  if (a.max_steps) cfg.train.max_steps = *a.max_steps;
  if (a.threads) cfg.train.threads = *a.threads;

  FreezeConfig freeze;
  try {
    freeze = parse_freeze_spec(a.freeze, cfg.model.n_layers);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto arith = parameter_arithmetic(cfg.model);
  const std::size_t trainable = trainable_arithmetic(cfg.model, freeze);
  out << "freeze " << to_freeze_spec(freeze, cfg.model.n_layers) << ": trainable parameters "
      << group_digits(trainable) << " of " << group_digits(arith.total) << "\n";
  if (a.dry_run) return kExitOk;

  if (a.train.empty() || a.val.empty() || a.out_dir.empty()) {
    throw UsageError("--train, --val and --out are required unless --dry-run is given");
  }
  const auto train = load_examples(a.train, cfg.features);
  const auto val = load_examples(a.val, cfg.features);
  if (train.empty()) throw UsageError("training manifest " + a.train + " has no examples");
  if (val.empty()) throw UsageError("validation manifest " + a.val + " has no examples");

  ParameterRegistry registry = init_registry(cfg.model, derive_seed(cfg.train.seed, "init"));
  if (count_trainable(registry, freeze) != trainable) {
    throw Error(Errc::shape_mismatch, "registry and closed-form trainable counts disagree");
  }

  const fs::path out_dir = a.out_dir;
  fs::create_directories(out_dir);
  const fs::path history_path = out_dir / "history.jsonl";
  std::ofstream history(history_path, std::ios::binary | std::ios::trunc);
  if (!history) throw Error(Errc::io_error, "cannot write " + history_path.string());

  const FitResult result = fit(train, val, registry, freeze, cfg.model, cfg.train, [&](const HistoryEntry& e) {
    history << to_json_line(e) << "\n";
    history.flush();
    out << "epoch " << e.epoch << " step " << e.step << " train_loss " << fixed(e.train_loss, 6) << " val_loss "
        << fixed(e.val_loss, 6) << " val_macro_f1 " << fixed(e.val_macro, 4) << "\n";
  });
  history.close();

  const fs::path ckpt = out_dir / "model.ckpt";
  save_checkpoint(ckpt, Checkpoint{cfg.model, cfg.features, result.best});

  RunManifest manifest = start_manifest("train", cfg);
  manifest.add_input(a.train);
  manifest.add_input(a.val);
  manifest.add_output(ckpt);
  manifest.add_output(history_path);
  manifest.save(out_dir / "run_manifest.json");
  out << "best epoch " << result.best_epoch << " of " << result.history.size() << ", " << result.state.step
      << " step(s); checkpoint " << ckpt.string() << "\n";
  return kExitOk;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string checkpoint;
  std::string manifest;
  std::string out_dir;
  std::vector<double> thresholds;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream&) {
  const RunConfig cfg = load_run_config(a.common);
  std::vector<double> thresholds = a.thresholds;
  if (thresholds.empty()) thresholds.push_back(cfg.train.threshold);
  for (double t : thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw UsageError("threshold " + fixed(t, 4) + " is outside (0, 1)");
  }

  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const auto examples = load_examples(a.manifest, ckpt.features);
  if (examples.empty()) throw UsageError("manifest " + a.manifest + " has no examples");

  std::vector<Logits> logits;
  std::vector<LabelVector> targets;
  for (const auto& ex : examples) {
    logits.push_back(forward(ex.features, ckpt.registry, ckpt.model));
    targets.push_back(ex.labels);
  }

  const fs::path out_dir = a.out_dir;
  fs::create_directories(out_dir);
  RunManifest manifest = start_manifest("eval", cfg);
  manifest.add_input(a.checkpoint);
  manifest.add_input(a.manifest);

  for (double t : thresholds) {
    std::vector<LabelVector> preds;
    for (const auto& l : logits) preds.push_back(predict(l, t));
    const EvalReport report = f1_report(preds, targets, t);
    const std::string stem = "eval_t" + fixed(t, 2);
    const fs::path json = out_dir / (stem + ".json");
    const fs::path table = out_dir / (stem + ".txt");
    write_text(json, report.to_json() + "\n");
    write_text(table, report.to_table());
    manifest.add_output(json);
    manifest.add_output(table);
    out << "threshold " << fixed(t, 2) << ": micro " << fixed(report.micro_f1, 4) << " macro "
        << fixed(report.macro_f1, 4) << " weighted " << fixed(report.weighted_f1, 4) << "\n";
  }
  manifest.save(out_dir / "run_manifest.json");
  return kExitOk;
}

// ---- params -----------------------------------------------------------------

struct ParamsArgs {
  Common common;
  std::vector<std::string> freeze;
};

int cmd_params(const ParamsArgs& a, std::ostream& out, std::ostream&) {
  const RunConfig cfg = load_run_config(a.common);
  std::vector<std::string> specs = a.freeze.empty() ? reference_freeze_specs() : a.freeze;
  std::vector<FreezeConfig> configs;
  for (const auto& s : specs) {
    try {
      configs.push_back(parse_freeze_spec(s, cfg.model.n_layers));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }

  const auto arith = parameter_arithmetic(cfg.model);
  out << "feature extractor " << group_digits(arith.feature_extractor) << " (conv1 " << group_digits(arith.conv1)
      << ", conv2 " << group_digits(arith.conv2) << ", positions " << group_digits(arith.positions) << ")\n"
      << "encoder layer     " << group_digits(arith.per_layer) << " x " << cfg.model.n_layers << "\n"
      << "head              " << group_digits(arith.head) << "\n"
      << "total             " << group_digits(arith.total) << "\n\n";

  std::size_t width = std::string("configuration").size();
  for (const auto& s : specs) width = std::max(width, s.size());
  const auto pad = [](std::string s, std::size_t w, bool left) {
    if (s.size() < w) s = left ? s + std::string(w - s.size(), ' ') : std::string(w - s.size(), ' ') + s;
    return s;
  };
  out << pad("configuration", width, true) << "  " << pad("trainable", 12, false) << "  "
      << pad("millions", 8, false) << "\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const std::size_t n = trainable_arithmetic(cfg.model, configs[i]);
    out << pad(specs[i], width, true) << "  " << pad(group_digits(n), 12, false) << "  "
        << pad(fixed(static_cast<double>(n) / 1e6, 2), 8, false) << "\n";
  }
  return kExitOk;
}

}  // namespace

std::string group_digits(std::size_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i && (digits.size() - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"stutterkit: multi-label stuttered speech classification toolkit", "stutterkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  FeaturizeArgs fz;
  auto* featurize = app.add_subcommand("featurize", "WAV directory -> log-mel spectrogram dumps");
  add_common(featurize, fz.common);
  featurize->add_option("in_dir", fz.in_dir, "directory of 16 kHz mono PCM WAV files")->required();
  featurize->add_option("out_dir", fz.out_dir, "destination for dumps and features.csv")->required();
  featurize->add_flag("--skip-bad", fz.skip_bad, "log and skip clips that fail to decode");

  CurateArgs cu;
  auto* curate = app.add_subcommand("curate", "clean, pair, balance and split a clip inventory");
  add_common(curate, cu.common);
  curate->add_option("--manifest", cu.manifest, "inventory CSV")->required()->check(CLI::ExistingFile);
  curate->add_option("--audio-dir", cu.audio_dir, "directory holding <clip_id>.wav")->required()
      ->check(CLI::ExistingDirectory);
  curate->add_option("--plan", cu.plan, "split plan name")->required();
  curate->add_option("--out", cu.out_dir, "output directory")->required();
  curate->add_option("--groups", cu.groups, "CSV speaker_id,group overriding automatic grouping")
      ->check(CLI::ExistingFile);
  curate->add_option("--rare-policy", cu.rare_policy, "drop-list or frequency")
      ->check(CLI::IsMember({"drop-list", "frequency"}));
  curate->add_flag("--no-balance", cu.no_balance, "keep every NoStutteredWords pair");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "fine-tune the classifier under a freeze configuration");
  add_common(train, tr.common);
  train->add_option("--train", tr.train, "training manifest CSV")->check(CLI::ExistingFile);
  train->add_option("--val", tr.val, "validation manifest CSV")->check(CLI::ExistingFile);
  train->add_option("--out", tr.out_dir, "output directory");
  train->add_option("--freeze", tr.freeze, "freeze spec, e.g. Frz0-4+FrzFE")->capture_default_str();
  train->add_option("--max-steps", tr.max_steps, "stop after this many optimiser steps");
  train->add_option("--threads", tr.threads, "worker threads for per-example gradients");
  train->add_flag("--dry-run", tr.dry_run, "report trainable parameters and exit");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "score a checkpoint on a manifest");
  add_common(eval, ev.common);
  eval->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--manifest", ev.manifest, "manifest CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", ev.out_dir, "output directory")->required();
  eval->add_option("--threshold", ev.thresholds, "decision threshold; repeat to sweep");

  ParamsArgs pa;
  auto* params = app.add_subcommand("params", "parameter audit for freeze configurations");
  add_common(params, pa.common);
  params->add_option("--freeze", pa.freeze, "freeze spec; repeatable (default: the seven reference specs)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*featurize) return cmd_featurize(fz, out, err);
    if (*curate) return cmd_curate(cu, out, err);
    if (*train) return cmd_train(tr, out, err);
    if (*eval) return cmd_eval(ev, out, err);
    if (*params) return cmd_params(pa, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::invalid_argument || e.code() == Errc::config_mismatch ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace stutterkit::cli
