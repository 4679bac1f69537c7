#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stutterkit/freeze.hpp"
#include "stutterkit/model_config.hpp"
#include "stutterkit/tensor.hpp"

namespace stutterkit {

enum class ParamGroup { feature_extractor, encoder_layer, head };

std::string_view to_string(ParamGroup g);

struct Parameter {
  std::string name;
  std::vector<Eigen::Index> shape;
  std::vector<double> values;
  ParamGroup group = ParamGroup::head;
  int layer = -1;  // encoder layer index, -1 outside the encoder stack
  bool trainable = true;

  std::size_t numel() const { return values.size(); }

  /// 2-D view: first dimension as rows, the rest flattened.
  ConstMatrixMap matrix() const;
  MatrixMap matrix();
  const double* data() const { return values.data(); }
};

/// Every named tensor of the model, in a fixed insertion order.
class ParameterRegistry {
 public:
  Parameter& add(std::string name, std::vector<Eigen::Index> shape, ParamGroup group, int layer = -1);

  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  const Parameter& at(std::string_view name) const { return entries_[index_of(name)]; }
  Parameter& at(std::string_view name) { return entries_[index_of(name)]; }
  const Parameter& operator[](std::size_t i) const { return entries_[i]; }
  Parameter& operator[](std::size_t i) { return entries_[i]; }

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<Parameter>& entries() const noexcept { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::size_t total_count() const;
  std::size_t trainable_count() const;
  std::size_t group_count(ParamGroup g) const;

  /// Sets every trainable flag from the freeze config.
  void apply(const FreezeConfig& freeze);

  /// Rounds all values to the nearest f32, the checkpoint storage precision.
  void round_to_storage();

  bool operator==(const ParameterRegistry& other) const;

 private:
  std::vector<Parameter> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Whether a parameter would be trainable under the freeze config.
bool is_trainable_under(const Parameter& p, const FreezeConfig& freeze);

/// Parameter count left trainable by the freeze config.
std::size_t count_trainable(const ParameterRegistry& registry, const FreezeConfig& freeze);

/// Registry layout for the config, values zero (positions filled in).
ParameterRegistry make_registry(const ModelConfig& cfg);

/// make_registry plus initialisation: affine and conv weights/biases drawn
/// from U(-1/sqrt(fan_in), 1/sqrt(fan_in)), norms gamma=1 beta=0, positional
/// table sinusoidal. Values are rounded to f32.
ParameterRegistry init_registry(const ModelConfig& cfg, std::uint64_t seed);

/// Closed-form counts used by the parameter audit.
struct ParameterArithmetic {
  std::size_t conv1, conv2, positions, feature_extractor;
  std::size_t per_layer;
  std::size_t final_norm, projector, classifier, head;
  std::size_t total;
};
ParameterArithmetic parameter_arithmetic(const ModelConfig& cfg);

/// Trainable count from the closed form, without materialising tensors.
std::size_t trainable_arithmetic(const ModelConfig& cfg, const FreezeConfig& freeze);

}  // namespace stutterkit
