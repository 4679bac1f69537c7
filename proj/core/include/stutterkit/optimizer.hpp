#pragma once

#include <cstdint>
#include <span>

namespace stutterkit {

struct AdamConfig {
  double learning_rate = 2.5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // decoupled
};

/// One bias-corrected Adam update of `param` in place. `step` is the 1-based
/// update count; m and v are the running moments for this tensor.
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 std::uint64_t step, const AdamConfig& cfg);

}  // namespace stutterkit
