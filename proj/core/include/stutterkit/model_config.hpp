#pragma once

#include <string>

#include "stutterkit/labels.hpp"
#include "stutterkit/layers.hpp"

namespace stutterkit {

/// Encoder-only classifier dimensions. Defaults are the six-layer, 512-wide
/// base encoder with a 512->256 projector and a six-way classifier.
struct ModelConfig {
  int d_model = 512;
  int n_layers = 6;
  int n_heads = 8;
  int d_ffn = 2048;
  int n_mels = 80;
  int max_positions = 1500;
  int d_proj = 256;
  int n_classes = static_cast<int>(kNumClasses);
  nn::NormPlacement norm_placement = nn::NormPlacement::pre;
  nn::Activation ffn_activation = nn::Activation::gelu;
  bool attention_key_bias = false;
  double layer_norm_eps = 1e-5;

  int head_dim() const { return d_model / n_heads; }

  /// Throws InvalidArgument on inconsistent dimensions.
  void validate() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);

  bool operator==(const ModelConfig&) const = default;
};

std::string to_string(nn::NormPlacement p);
std::string to_string(nn::Activation a);
nn::NormPlacement parse_norm_placement(const std::string& s);
nn::Activation parse_activation(const std::string& s);

}  // namespace stutterkit
