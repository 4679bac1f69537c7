#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stutterkit/labels.hpp"
#include "stutterkit/model.hpp"

namespace stutterkit {

struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t support = 0;  // tp + fn

  bool operator==(const ClassCounts&) const = default;
};

struct EvalReport {
  std::vector<double> per_class_f1;
  std::vector<ClassCounts> per_class_counts;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  double threshold = 0.5;
  std::size_t n_examples = 0;

  std::string to_json() const;

  /// Micro / Macro / Weighted rows followed by one row per class.
  std::string to_table() const;
};

/// Bit i is set iff sigmoid(logit_i) >= threshold. No exclusivity is imposed
/// between NoStutteredWords and the disfluency bits.
LabelVector predict(const Logits& logits, double threshold = 0.5);

/// 2TP / (2TP + FP + FN) per class, 0 when the denominator is 0. Only the
/// first n_classes bits of each vector are scored.
EvalReport f1_report(std::span<const LabelVector> predictions, std::span<const LabelVector> targets,
                     double threshold = 0.5, std::size_t n_classes = kNumClasses);

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

}  // namespace stutterkit
