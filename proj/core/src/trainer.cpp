#include "stutterkit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "stutterkit/error.hpp"
#include "stutterkit/loss.hpp"
#include "stutterkit/random.hpp"

namespace stutterkit {

std::string to_string(StopMetric m) {
  switch (m) {
    case StopMetric::macro_f1: return "macro_f1";
    case StopMetric::micro_f1: return "micro_f1";
    case StopMetric::weighted_f1: return "weighted_f1";
    case StopMetric::val_loss: return "val_loss";
  }
  return "macro_f1";
}

StopMetric parse_stop_metric(const std::string& s) {
  for (auto m : {StopMetric::macro_f1, StopMetric::micro_f1, StopMetric::weighted_f1, StopMetric::val_loss}) {
    if (to_string(m) == s) return m;
  }
  throw Error(Errc::invalid_argument, "unknown early_stop_metric '" + s + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(Errc::invalid_argument, "batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw Error(Errc::invalid_argument, "learning_rate must be >= 0");
  if (early_stop_patience < 1) throw Error(Errc::invalid_argument, "early_stop_patience must be >= 1");
  if (max_epochs < 1) throw Error(Errc::invalid_argument, "max_epochs must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(Errc::invalid_argument, "threshold must lie in (0, 1)");
  if (threads < 1) throw Error(Errc::invalid_argument, "threads must be >= 1");
}

TrainState TrainState::init(const ParameterRegistry& registry, std::uint64_t seed) {
  TrainState s;
  s.seed = seed;
  s.m.resize(registry.size());
  s.v.resize(registry.size());
  for (std::size_t i = 0; i < registry.size(); ++i) {
    if (!registry[i].trainable) continue;
    s.m[i].assign(registry[i].numel(), 0.0);
    s.v[i].assign(registry[i].numel(), 0.0);
  }
  return s;
}

Gradients backward(const Batch& batch, const ParameterRegistry& registry, const ModelConfig& cfg, double* mean_loss,
                   unsigned threads) {
  if (batch.empty()) throw Error(Errc::empty_dataset, "empty batch");
  const std::size_t n = batch.size();
  const double weight = 1.0 / static_cast<double>(n);
  Gradients total(registry);
  std::vector<double> losses(n, 0.0);

  const std::size_t lanes = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  std::vector<Gradients> scratch(lanes, Gradients(registry));
  for (std::size_t first = 0; first < n; first += lanes) {
    const std::size_t count = std::min(lanes, n - first);
    auto work = [&](std::size_t lane) {
      scratch[lane].zero();
      const Example& ex = *batch[first + lane];
      losses[first + lane] = forward_backward(ex.features, ex.labels, registry, cfg, scratch[lane], weight);
    };
    if (count == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t lane = 0; lane < count; ++lane) pool.emplace_back(work, lane);
    }
    for (std::size_t lane = 0; lane < count; ++lane) total.add(scratch[lane]);
  }

  if (!total.all_finite()) throw Error(Errc::non_finite_gradient, "NaN or Inf in gradients");
  if (mean_loss != nullptr) *mean_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(n);
  return total;
}

double train_step(TrainState& state, ParameterRegistry& registry, const ModelConfig& cfg, const Batch& batch,
                  const TrainConfig& train) {
  double loss = 0.0;
  const Gradients grads = backward(batch, registry, cfg, &loss, train.threads);
  ++state.step;
  const AdamConfig adam = train.adam();
  for (std::size_t i = 0; i < registry.size(); ++i) {
    Parameter& p = registry[i];
    if (!p.trainable) continue;
    if (state.m[i].size() != p.numel()) {
      state.m[i].assign(p.numel(), 0.0);
      state.v[i].assign(p.numel(), 0.0);
    }
    adam_update(p.values, grads[i], state.m[i], state.v[i], state.step, adam);
    for (double& v : p.values) v = static_cast<double>(static_cast<float>(v));
  }
  return loss;
}

bool EarlyStopping::update(double metric) {
  if (metric > best_) {
    best_ = metric;
    since_improvement_ = 0;
    return true;
  }
  ++since_improvement_;
  return false;
}

Evaluation evaluate(const std::vector<Example>& examples, const ParameterRegistry& registry, const ModelConfig& cfg,
                    double threshold) {
  if (examples.empty()) throw Error(Errc::empty_set, "nothing to evaluate");
  Evaluation out;
  std::vector<LabelVector> predictions;
  std::vector<LabelVector> targets;
  double loss = 0.0;
  for (const auto& ex : examples) {
    const Logits logits = forward(ex.features, registry, cfg);
    loss += bce_with_logits(logits.values, ex.labels);
    predictions.push_back(predict(logits, threshold));
    targets.push_back(ex.labels);
    out.logits.push_back(logits);
  }
  out.report = f1_report(predictions, targets, threshold);
  out.mean_loss = loss / static_cast<double>(examples.size());
  return out;
}

std::string to_json_line(const HistoryEntry& e) {
  nlohmann::ordered_json j;
  j["epoch"] = e.epoch;
  j["step"] = e.step;
  j["train_loss"] = e.train_loss;
  j["val_loss"] = e.val_loss;
  j["val_micro"] = e.val_micro;
  j["val_macro"] = e.val_macro;
  j["val_weighted"] = e.val_weighted;
  return j.dump();
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

namespace {

double stop_value(StopMetric metric, const Evaluation& e) {
  switch (metric) {
    case StopMetric::macro_f1: return e.report.macro_f1;
    case StopMetric::micro_f1: return e.report.micro_f1;
    case StopMetric::weighted_f1: return e.report.weighted_f1;
    case StopMetric::val_loss: return -e.mean_loss;
  }
  return e.report.macro_f1;
}

}  // namespace

FitResult fit(const std::vector<Example>& train, const std::vector<Example>& val, ParameterRegistry& registry,
              const FreezeConfig& freeze, const ModelConfig& cfg, const TrainConfig& train_cfg,
              const EpochCallback& on_epoch) {
  train_cfg.validate();
  if (train.empty()) throw Error(Errc::empty_dataset, "training set is empty");
  if (val.empty()) throw Error(Errc::empty_dataset, "validation set is empty");

  registry.apply(freeze);
  FitResult result;
  result.state = TrainState::init(registry, train_cfg.seed);
  result.best = registry;
  EarlyStopping stopper(train_cfg.early_stop_patience);

  bool out_of_steps = false;
  for (int epoch = 1; epoch <= train_cfg.max_epochs && !out_of_steps; ++epoch) {
    result.state.epoch = epoch;
    std::vector<std::size_t> order(train.size());
    if (train_cfg.shuffle) {
      order = shuffled_indices(train.size(), derive_seed(train_cfg.seed, "epoch-" + std::to_string(epoch)));
    } else {
      std::iota(order.begin(), order.end(), std::size_t{0});
    }

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t first = 0; first < order.size(); first += train_cfg.batch_size) {
      Batch batch;
      for (std::size_t i = first; i < std::min(order.size(), first + train_cfg.batch_size); ++i) {
        batch.push_back(&train[order[i]]);
      }
      loss_sum += train_step(result.state, registry, cfg, batch, train_cfg);
      ++batches;
      if (train_cfg.max_steps != 0 && result.state.step >= train_cfg.max_steps) {
        out_of_steps = true;
        break;
      }
    }

    const Evaluation eval = evaluate(val, registry, cfg, train_cfg.threshold);
    HistoryEntry entry;
    entry.epoch = epoch;
    entry.step = result.state.step;
    entry.train_loss = loss_sum / static_cast<double>(batches);
    entry.val_loss = eval.mean_loss;
    entry.val_micro = eval.report.micro_f1;
    entry.val_macro = eval.report.macro_f1;
    entry.val_weighted = eval.report.weighted_f1;
    result.history.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (stopper.update(stop_value(train_cfg.early_stop_metric, eval))) {
      result.best = registry;
      result.best_epoch = epoch;
    }
    result.state.best_metric = stopper.best();
    result.state.epochs_since_improvement = stopper.epochs_since_improvement();
    if (stopper.should_stop()) break;
  }
  return result;
}

}  // namespace stutterkit
