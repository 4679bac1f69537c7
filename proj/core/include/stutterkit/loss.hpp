#pragma once

#include <array>
#include <span>

#include "stutterkit/labels.hpp"

namespace stutterkit {

double sigmoid(double z);

/// Mean over classes of max(z,0) - z*y + log(1 + exp(-|z|)).
double bce_with_logits(std::span<const double> logits, const LabelVector& target);

/// d(bce_with_logits)/dz = (sigmoid(z) - y) / n.
std::array<double, kNumClasses> bce_with_logits_grad(std::span<const double, kNumClasses> logits,
                                                     const LabelVector& target);

}  // namespace stutterkit
