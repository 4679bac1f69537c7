#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "stutterkit/featurizer.hpp"
#include "stutterkit/labels.hpp"
#include "stutterkit/model_config.hpp"
#include "stutterkit/registry.hpp"

namespace stutterkit {

/// Pre-sigmoid scores in the fixed class order.
struct Logits {
  std::array<double, kNumClasses> values{};

  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const Logits&) const = default;
};

/// Gradient buffers aligned with a registry; frozen entries have none.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParameterRegistry& registry);

  std::size_t size() const noexcept { return buffers_.size(); }
  bool has(std::size_t i) const { return present_[i]; }
  double* data(std::size_t i) { return present_[i] ? buffers_[i].data() : nullptr; }
  std::span<const double> operator[](std::size_t i) const { return buffers_[i]; }
  std::span<double> operator[](std::size_t i) { return buffers_[i]; }

  void zero();
  void add(const Gradients& other);
  void scale(double factor);
  bool all_finite() const;

 private:
  std::vector<std::vector<double>> buffers_;
  std::vector<bool> present_;
};

/// conv stem -> + positions -> encoder layers -> final norm -> mean over time
/// -> projector -> classifier. features is a normalised [n_mels x T]
/// spectrogram with T even and T/2 <= max_positions.
Logits forward(const Matrix& features, const ParameterRegistry& registry, const ModelConfig& cfg);
Logits forward(const LogMelSpectrogram& spec, const ParameterRegistry& registry, const ModelConfig& cfg);

/// Forward plus backward for one example. Gradients of the mean BCE loss,
/// multiplied by `weight`, are added into grads for every trainable tensor.
/// Returns the unweighted loss.
double forward_backward(const Matrix& features, const LabelVector& target, const ParameterRegistry& registry,
                        const ModelConfig& cfg, Gradients& grads, double weight = 1.0);

}  // namespace stutterkit
