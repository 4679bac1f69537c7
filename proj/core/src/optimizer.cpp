#include "stutterkit/optimizer.hpp"

#include <cmath>

#include "stutterkit/error.hpp"

namespace stutterkit {

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 std::uint64_t step, const AdamConfig& cfg) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size()) {
    throw Error(Errc::shape_mismatch, "adam_update: buffer sizes differ");
  }
  if (step == 0) throw Error(Errc::invalid_argument, "adam_update: step is 1-based");
  const double t = static_cast<double>(step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    if (cfg.weight_decay != 0.0) param[i] -= cfg.learning_rate * cfg.weight_decay * param[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    param[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

}  // namespace stutterkit
