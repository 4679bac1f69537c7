#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "stutterkit/evaluator.hpp"
#include "stutterkit/freeze.hpp"
#include "stutterkit/model.hpp"
#include "stutterkit/optimizer.hpp"

namespace stutterkit {

enum class StopMetric { macro_f1, micro_f1, weighted_f1, val_loss };

std::string to_string(StopMetric m);
StopMetric parse_stop_metric(const std::string& s);

struct TrainConfig {
  std::size_t batch_size = 8;
  double learning_rate = 2.5e-5;
  int max_epochs = 20;
  int early_stop_patience = 3;
  StopMetric early_stop_metric = StopMetric::macro_f1;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  std::uint64_t max_steps = 0;  // 0: bounded by max_epochs only
  double threshold = 0.5;       // decision threshold for validation F1
  unsigned threads = 1;
  bool shuffle = true;

  AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon, weight_decay}; }
  void validate() const;
};

struct Example {
  std::string id;
  Matrix features;  // normalised [n_mels x T]
  LabelVector labels;
};

using Batch = std::vector<const Example*>;

struct TrainState {
  std::uint64_t step = 0;
  int epoch = 0;
  std::vector<std::vector<double>> m;  // empty for frozen tensors
  std::vector<std::vector<double>> v;
  double best_metric = -std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;
  std::uint64_t seed = 0;

  static TrainState init(const ParameterRegistry& registry, std::uint64_t seed);
};

/// Batch-mean gradients for the trainable tensors. Each example's gradient
/// is computed into its own buffer and summed in batch order, so the result
/// does not depend on `threads`. Throws NonFiniteGradient.
Gradients backward(const Batch& batch, const ParameterRegistry& registry, const ModelConfig& cfg,
                   double* mean_loss = nullptr, unsigned threads = 1);

/// One optimiser update of the trainable tensors; frozen tensors are not
/// touched. Updated values are rounded to f32 storage. Returns the batch loss.
double train_step(TrainState& state, ParameterRegistry& registry, const ModelConfig& cfg, const Batch& batch,
                  const TrainConfig& train);

/// Patience-based stopping on a metric where larger is better.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Records one epoch's metric; returns true when it is a strict improvement.
  bool update(double metric);
  bool should_stop() const { return since_improvement_ >= patience_; }
  double best() const { return best_; }
  int epochs_since_improvement() const { return since_improvement_; }

 private:
  int patience_;
  double best_ = -std::numeric_limits<double>::infinity();
  int since_improvement_ = 0;
};

struct Evaluation {
  EvalReport report;
  double mean_loss = 0.0;
  std::vector<Logits> logits;
};

Evaluation evaluate(const std::vector<Example>& examples, const ParameterRegistry& registry, const ModelConfig& cfg,
                    double threshold = 0.5);

struct HistoryEntry {
  int epoch = 0;
  std::uint64_t step = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_micro = 0.0;
  double val_macro = 0.0;
  double val_weighted = 0.0;
};

std::string to_json_line(const HistoryEntry& e);

struct FitResult {
  ParameterRegistry best;
  int best_epoch = 0;
  std::vector<HistoryEntry> history;
  TrainState state;
};

using EpochCallback = std::function<void(const HistoryEntry&)>;

/// Trains registry in place under the freeze config; returns a copy of the
/// registry from the best validation epoch. Epoch order is reshuffled from
/// (seed, epoch). Throws EmptyDataset.
FitResult fit(const std::vector<Example>& train, const std::vector<Example>& val, ParameterRegistry& registry,
              const FreezeConfig& freeze, const ModelConfig& cfg, const TrainConfig& train_cfg,
              const EpochCallback& on_epoch = {});

/// Fisher-Yates permutation of [0, n) from the given seed.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

}  // namespace stutterkit
