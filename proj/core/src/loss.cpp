#include "stutterkit/loss.hpp"

#include <algorithm>
#include <cmath>

#include "stutterkit/error.hpp"

namespace stutterkit {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_with_logits(std::span<const double> logits, const LabelVector& target) {
  if (logits.empty() || logits.size() > kNumClasses) {
    throw Error(Errc::shape_mismatch, "bce_with_logits expects 1..6 logits");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const double y = target[i] ? 1.0 : 0.0;
    sum += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  return sum / static_cast<double>(logits.size());
}

std::array<double, kNumClasses> bce_with_logits_grad(std::span<const double, kNumClasses> logits,
                                                     const LabelVector& target) {
  std::array<double, kNumClasses> g{};
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    g[i] = (sigmoid(logits[i]) - (target[i] ? 1.0 : 0.0)) / static_cast<double>(kNumClasses);
  }
  return g;
}

}  // namespace stutterkit
