#include "harness.hpp"

#include <cmath>
#include <cstring>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "stutterkit/freeze.hpp"
#include "stutterkit/model.hpp"
#include "stutterkit/random.hpp"
#include "stutterkit/registry.hpp"
#include "stutterkit/trainer.hpp"

namespace fixtures {

using namespace stutterkit;

std::vector<TensorGradError> gradient_check(const ModelConfig& cfg, std::uint64_t seed, int frames, double h) {
  ParameterRegistry reg = init_registry(cfg, seed);
  // Move norms away from the identity so their gradients are not special.
  Rng rng(seed + 100);
  for (std::size_t i = 0; i < reg.size(); ++i) {
    if (reg[i].name.find("norm") == std::string::npos) continue;
    for (auto& v : reg[i].values) v += rng.uniform(-0.3, 0.3);
  }
  const Matrix features = random_features(cfg.n_mels, frames, seed + 1);
  const oracle::Grid grid = to_grid(features);
  LabelVector target;
  target.set(Label::block);
  target.set(Label::sound_rep);

  Gradients grads(reg);
  forward_backward(features, target, reg, cfg, grads, 1.0);

  const auto loss = [&] { return oracle::bce(oracle::forward(reg, cfg, grid), target); };
  std::vector<TensorGradError> out;
  for (std::size_t i = 0; i < reg.size(); ++i) {
    if (!reg[i].trainable) continue;
    const auto numeric = oracle::central_difference(reg[i].values, loss, h);
    const auto analytic = grads[i];
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t k = 0; k < numeric.size(); ++k) {
      diff += (analytic[k] - numeric[k]) * (analytic[k] - numeric[k]);
      na += analytic[k] * analytic[k];
      nn += numeric[k] * numeric[k];
    }
    const double denom = std::max(std::sqrt(std::max(na, nn)), 1e-300);
    out.push_back({reg[i].name, numeric.size(), std::sqrt(diff) / denom});
  }
  return out;
}

FreezeCheck freeze_identity(const std::string& spec, int steps, std::uint64_t seed) {
  ModelConfig cfg = tiny_model(nn::NormPlacement::pre, nn::Activation::gelu, 6);
  FreezeCheck check;
  check.spec = spec;
  const FreezeConfig freeze = parse_freeze_spec(spec, cfg.n_layers);

  ParameterRegistry reg = init_registry(cfg, seed);
  reg.apply(freeze);
  const ParameterRegistry initial = reg;

  std::vector<Example> data;
  for (int i = 0; i < 4; ++i) {
    Example ex;
    ex.id = std::to_string(i);
    ex.features = random_features(cfg.n_mels, 8, seed + 10 + static_cast<std::uint64_t>(i));
    ex.labels = LabelVector::single(kAllLabels[static_cast<std::size_t>(i)]);
    data.push_back(std::move(ex));
  }
  TrainConfig train;
  train.learning_rate = 1e-3;
  TrainState state = TrainState::init(reg, seed);
  for (int s = 0; s < steps; ++s) {
    Batch batch = {&data[static_cast<std::size_t>(s) % 4], &data[static_cast<std::size_t>(s + 1) % 4]};
    train_step(state, reg, cfg, batch, train);
  }

  for (std::size_t i = 0; i < reg.size(); ++i) {
    const auto& before = initial[i].values;
    const auto& after = reg[i].values;
    const bool same = std::memcmp(before.data(), after.data(), before.size() * sizeof(double)) == 0;
    if (initial[i].trainable) {
      ++check.trainable_tensors;
      if (same) ++check.trainable_unchanged;
    } else {
      ++check.frozen_tensors;
      if (!same) ++check.frozen_changed;
    }
  }
  return check;
}

}  // namespace fixtures
