#include "stutterkit/model_config.hpp"

#include <json.hpp>

#include "stutterkit/error.hpp"

namespace stutterkit {

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(Errc::invalid_argument, "model config: " + msg); };
  if (d_model <= 0 || n_layers < 0 || n_heads <= 0 || d_ffn <= 0 || n_mels <= 0 || d_proj <= 0) {
    fail("dimensions must be positive");
  }
  if (d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
  if (d_model % 2 != 0) fail("d_model must be even for sinusoidal positions");
  if (n_classes != static_cast<int>(kNumClasses)) fail("n_classes must be 6");
  if (max_positions <= 0) fail("max_positions must be positive");
  if (!(layer_norm_eps > 0.0)) fail("layer_norm_eps must be positive");
}

std::string to_string(nn::NormPlacement p) { return p == nn::NormPlacement::pre ? "pre" : "post"; }
std::string to_string(nn::Activation a) { return a == nn::Activation::gelu ? "gelu" : "relu"; }

nn::NormPlacement parse_norm_placement(const std::string& s) {
  if (s == "pre") return nn::NormPlacement::pre;
  if (s == "post") return nn::NormPlacement::post;
  throw Error(Errc::invalid_argument, "norm_placement must be 'pre' or 'post', got '" + s + "'");
}

nn::Activation parse_activation(const std::string& s) {
  if (s == "gelu") return nn::Activation::gelu;
  if (s == "relu") return nn::Activation::relu;
  throw Error(Errc::invalid_argument, "ffn_activation must be 'gelu' or 'relu', got '" + s + "'");
}

std::string ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["d_model"] = d_model;
  j["n_layers"] = n_layers;
  j["n_heads"] = n_heads;
  j["d_ffn"] = d_ffn;
  j["n_mels"] = n_mels;
  j["max_positions"] = max_positions;
  j["d_proj"] = d_proj;
  j["n_classes"] = n_classes;
  j["norm_placement"] = to_string(norm_placement);
  j["ffn_activation"] = to_string(ffn_activation);
  j["attention_key_bias"] = attention_key_bias;
  j["layer_norm_eps"] = layer_norm_eps;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ModelConfig c;
  c.d_model = j.value("d_model", c.d_model);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_ffn = j.value("d_ffn", c.d_ffn);
  c.n_mels = j.value("n_mels", c.n_mels);
  c.max_positions = j.value("max_positions", c.max_positions);
  c.d_proj = j.value("d_proj", c.d_proj);
  c.n_classes = j.value("n_classes", c.n_classes);
  c.norm_placement = parse_norm_placement(j.value("norm_placement", std::string("pre")));
  c.ffn_activation = parse_activation(j.value("ffn_activation", std::string("gelu")));
  c.attention_key_bias = j.value("attention_key_bias", c.attention_key_bias);
  c.layer_norm_eps = j.value("layer_norm_eps", c.layer_norm_eps);
  c.validate();
  return c;
}

}  // namespace stutterkit
