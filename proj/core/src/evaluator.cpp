#include "stutterkit/evaluator.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "stutterkit/error.hpp"
#include "stutterkit/loss.hpp"

namespace stutterkit {

LabelVector predict(const Logits& logits, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(Errc::invalid_argument, "threshold must lie in (0, 1)");
  }
  LabelVector out;
  for (std::size_t i = 0; i < kNumClasses; ++i) out.set(i, sigmoid(logits[i]) >= threshold);
  return out;
}

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

EvalReport f1_report(std::span<const LabelVector> predictions, std::span<const LabelVector> targets, double threshold,
                     std::size_t n_classes) {
  if (predictions.size() != targets.size()) {
    throw Error(Errc::length_mismatch, std::to_string(predictions.size()) + " predictions vs " +
                                           std::to_string(targets.size()) + " targets");
  }
  if (targets.empty()) throw Error(Errc::empty_set, "cannot score an empty set");
  if (n_classes == 0 || n_classes > kNumClasses) throw Error(Errc::invalid_argument, "n_classes must be 1..6");

  EvalReport r;
  r.threshold = threshold;
  r.n_examples = targets.size();
  r.per_class_counts.assign(n_classes, {});
  for (std::size_t n = 0; n < targets.size(); ++n) {
    for (std::size_t c = 0; c < n_classes; ++c) {
      const bool p = predictions[n][c];
      const bool t = targets[n][c];
      auto& k = r.per_class_counts[c];
      if (p && t) ++k.tp;
      if (p && !t) ++k.fp;
      if (!p && t) ++k.fn;
      if (t) ++k.support;
    }
  }

  std::size_t tp = 0, fp = 0, fn = 0, support = 0;
  double weighted_sum = 0.0;
  double macro_sum = 0.0;
  r.per_class_f1.resize(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto& k = r.per_class_counts[c];
    const double f1 = f1_from_counts(k.tp, k.fp, k.fn);
    r.per_class_f1[c] = f1;
    macro_sum += f1;
    weighted_sum += f1 * static_cast<double>(k.support);
    tp += k.tp;
    fp += k.fp;
    fn += k.fn;
    support += k.support;
  }
  r.micro_f1 = f1_from_counts(tp, fp, fn);
  r.macro_f1 = macro_sum / static_cast<double>(n_classes);
  r.weighted_f1 = support == 0 ? 0.0 : weighted_sum / static_cast<double>(support);
  return r;
}

namespace {

std::string class_name(std::size_t c) { return std::string(label_name(static_cast<Label>(c))); }

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["threshold"] = threshold;
  j["n_examples"] = n_examples;
  j["micro_f1"] = micro_f1;
  j["macro_f1"] = macro_f1;
  j["weighted_f1"] = weighted_f1;
  auto classes = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < per_class_f1.size(); ++c) {
    const auto& k = per_class_counts[c];
    nlohmann::ordered_json e;
    e["label"] = class_name(c);
    e["f1"] = per_class_f1[c];
    e["tp"] = k.tp;
    e["fp"] = k.fp;
    e["fn"] = k.fn;
    e["support"] = k.support;
    classes.push_back(std::move(e));
  }
  j["per_class"] = std::move(classes);
  return j.dump(2);
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof(line), "%-18s %8s %8s\n", "Metric", "F1", "Support");
  os << line;
  const auto row = [&](const std::string& name, double value, std::size_t support, bool show_support) {
    if (show_support) {
      std::snprintf(line, sizeof(line), "%-18s %8.4f %8zu\n", name.c_str(), value, support);
    } else {
      std::snprintf(line, sizeof(line), "%-18s %8.4f %8s\n", name.c_str(), value, "");
    }
    os << line;
  };
  row("Micro", micro_f1, 0, false);
  row("Macro", macro_f1, 0, false);
  row("Weighted", weighted_f1, 0, false);
  for (std::size_t c = 0; c < per_class_f1.size(); ++c) {
    row(class_name(c), per_class_f1[c], per_class_counts[c].support, true);
  }
  return os.str();
}

}  // namespace stutterkit
