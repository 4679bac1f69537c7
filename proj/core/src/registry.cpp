#include "stutterkit/registry.hpp"

#include <cmath>
#include <numeric>

#include "stutterkit/error.hpp"
#include "stutterkit/random.hpp"

namespace stutterkit {

std::string_view to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::feature_extractor: return "feature_extractor";
    case ParamGroup::encoder_layer: return "encoder_layer";
    case ParamGroup::head: return "head";
  }
  return "unknown";
}

namespace {

Eigen::Index rows_of(const Parameter& p) { return p.shape.size() <= 1 ? 1 : p.shape.front(); }

}  // namespace

ConstMatrixMap Parameter::matrix() const {
  const Eigen::Index rows = rows_of(*this);
  return {values.data(), rows, static_cast<Eigen::Index>(values.size()) / rows};
}

MatrixMap Parameter::matrix() {
  const Eigen::Index rows = rows_of(*this);
  return {values.data(), rows, static_cast<Eigen::Index>(values.size()) / rows};
}

Parameter& ParameterRegistry::add(std::string name, std::vector<Eigen::Index> shape, ParamGroup group, int layer) {
  if (index_.contains(name)) throw Error(Errc::invalid_argument, "duplicate parameter name " + name);
  const auto n = std::accumulate(shape.begin(), shape.end(), Eigen::Index{1}, std::multiplies<>());
  Parameter p;
  p.name = name;
  p.shape = std::move(shape);
  p.values.assign(static_cast<std::size_t>(n), 0.0);
  p.group = group;
  p.layer = layer;
  index_.emplace(std::move(name), entries_.size());
  entries_.push_back(std::move(p));
  return entries_.back();
}

bool ParameterRegistry::contains(std::string_view name) const { return index_.contains(std::string(name)); }

std::size_t ParameterRegistry::index_of(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw Error(Errc::invalid_argument, "no parameter named " + std::string(name));
  return it->second;
}

std::size_t ParameterRegistry::total_count() const {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.numel();
  return n;
}

std::size_t ParameterRegistry::trainable_count() const {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.trainable ? p.numel() : 0;
  return n;
}

std::size_t ParameterRegistry::group_count(ParamGroup g) const {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.group == g ? p.numel() : 0;
  return n;
}

void ParameterRegistry::apply(const FreezeConfig& freeze) {
  for (auto& p : entries_) p.trainable = is_trainable_under(p, freeze);
}

void ParameterRegistry::round_to_storage() {
  for (auto& p : entries_) {
    for (double& v : p.values) v = static_cast<double>(static_cast<float>(v));
  }
}

bool ParameterRegistry::operator==(const ParameterRegistry& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.shape != b.shape || a.group != b.group || a.layer != b.layer ||
        a.trainable != b.trainable || a.values != b.values) {
      return false;
    }
  }
  return true;
}

bool is_trainable_under(const Parameter& p, const FreezeConfig& freeze) {
  switch (p.group) {
    case ParamGroup::feature_extractor: return !freeze.freeze_feature_extractor;
    case ParamGroup::encoder_layer: return !freeze.frozen_layers.contains(p.layer);
    case ParamGroup::head: return true;
  }
  return true;
}

std::size_t count_trainable(const ParameterRegistry& registry, const FreezeConfig& freeze) {
  std::size_t n = 0;
  for (const auto& p : registry) n += is_trainable_under(p, freeze) ? p.numel() : 0;
  return n;
}

ParameterRegistry make_registry(const ModelConfig& cfg) {
  cfg.validate();
  const Eigen::Index d = cfg.d_model;
  const Eigen::Index ffn = cfg.d_ffn;
  ParameterRegistry r;
  using G = ParamGroup;

  r.add("conv1.weight", {d, cfg.n_mels, 3}, G::feature_extractor);
  r.add("conv1.bias", {d}, G::feature_extractor);
  r.add("conv2.weight", {d, d, 3}, G::feature_extractor);
  r.add("conv2.bias", {d}, G::feature_extractor);
  auto& pos = r.add("embed_positions", {cfg.max_positions, d}, G::feature_extractor);
  const Matrix table = nn::sinusoidal_positions(cfg.max_positions, d);
  std::copy(table.data(), table.data() + table.size(), pos.values.begin());

  for (int k = 0; k < cfg.n_layers; ++k) {
    const std::string pre = "layers." + std::to_string(k) + ".";
    const auto layer = [&](const std::string& name, std::vector<Eigen::Index> shape) {
      r.add(pre + name, std::move(shape), G::encoder_layer, k);
    };
    layer("self_attn.q_proj.weight", {d, d});
    layer("self_attn.q_proj.bias", {d});
    layer("self_attn.k_proj.weight", {d, d});
    if (cfg.attention_key_bias) layer("self_attn.k_proj.bias", {d});
    layer("self_attn.v_proj.weight", {d, d});
    layer("self_attn.v_proj.bias", {d});
    layer("self_attn.out_proj.weight", {d, d});
    layer("self_attn.out_proj.bias", {d});
    layer("self_attn_layer_norm.weight", {d});
    layer("self_attn_layer_norm.bias", {d});
    layer("fc1.weight", {ffn, d});
    layer("fc1.bias", {ffn});
    layer("fc2.weight", {d, ffn});
    layer("fc2.bias", {d});
    layer("final_layer_norm.weight", {d});
    layer("final_layer_norm.bias", {d});
  }

  r.add("post_encoder_layernorm.weight", {d}, G::head);
  r.add("post_encoder_layernorm.bias", {d}, G::head);
  r.add("projector.weight", {cfg.d_proj, d}, G::head);
  r.add("projector.bias", {cfg.d_proj}, G::head);
  r.add("classifier.weight", {cfg.n_classes, cfg.d_proj}, G::head);
  r.add("classifier.bias", {cfg.n_classes}, G::head);
  return r;
}

namespace {

bool ends_with(std::string_view s, std::string_view suffix) { return s.ends_with(suffix); }

bool is_norm(std::string_view name) {
  return name.find("layer_norm") != std::string_view::npos || name.find("layernorm") != std::string_view::npos;
}

}  // namespace

ParameterRegistry init_registry(const ModelConfig& cfg, std::uint64_t seed) {
  ParameterRegistry r = make_registry(cfg);
  Rng rng(seed);
  std::size_t i = 0;
  while (i < r.size()) {
    Parameter& p = r[i];
    if (p.name == "embed_positions") {
      ++i;
      continue;
    }
    if (is_norm(p.name)) {
      const double fill = ends_with(p.name, ".weight") ? 1.0 : 0.0;
      std::fill(p.values.begin(), p.values.end(), fill);
      ++i;
      continue;
    }
    // weight: fan-in is everything but the output dimension; its bias (next
    // entry, when present) shares the bound.
    const auto fan_in = static_cast<double>(p.numel() / static_cast<std::size_t>(p.shape.front()));
    const double bound = 1.0 / std::sqrt(fan_in);
    for (double& v : p.values) v = rng.uniform(-bound, bound);
    const std::string stem = p.name.substr(0, p.name.size() - std::string_view(".weight").size());
    ++i;
    if (i < r.size() && r[i].name == stem + ".bias") {
      for (double& v : r[i].values) v = rng.uniform(-bound, bound);
      ++i;
    }
  }
  r.round_to_storage();
  return r;
}

ParameterArithmetic parameter_arithmetic(const ModelConfig& cfg) {
  const std::size_t d = static_cast<std::size_t>(cfg.d_model);
  const std::size_t ffn = static_cast<std::size_t>(cfg.d_ffn);
  ParameterArithmetic a{};
  a.conv1 = d * static_cast<std::size_t>(cfg.n_mels) * 3 + d;
  a.conv2 = d * d * 3 + d;
  a.positions = static_cast<std::size_t>(cfg.max_positions) * d;
  a.feature_extractor = a.conv1 + a.conv2 + a.positions;
  const std::size_t attn = 4 * d * d + 3 * d + (cfg.attention_key_bias ? d : 0);
  a.per_layer = attn + 2 * d + (d * ffn + ffn) + (ffn * d + d) + 2 * d;
  a.final_norm = 2 * d;
  a.projector = d * static_cast<std::size_t>(cfg.d_proj) + static_cast<std::size_t>(cfg.d_proj);
  a.classifier = static_cast<std::size_t>(cfg.d_proj * cfg.n_classes + cfg.n_classes);
  a.head = a.final_norm + a.projector + a.classifier;
  a.total = a.feature_extractor + static_cast<std::size_t>(cfg.n_layers) * a.per_layer + a.head;
  return a;
}

std::size_t trainable_arithmetic(const ModelConfig& cfg, const FreezeConfig& freeze) {
  const auto a = parameter_arithmetic(cfg);
  std::size_t n = a.total;
  if (freeze.freeze_feature_extractor) n -= a.feature_extractor;
  for (int layer : freeze.frozen_layers) {
    if (layer >= 0 && layer < cfg.n_layers) n -= a.per_layer;
  }
  return n;
}

}  // namespace stutterkit
