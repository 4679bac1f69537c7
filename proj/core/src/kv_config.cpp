#include "stutterkit/kv_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "stutterkit/error.hpp"

namespace stutterkit {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw Error(Errc::invalid_argument, "config key '" + key + "': expected " + what + ", got '" + value + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) bad_value(key, value, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true/false");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::invalid_argument, "config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw Error(Errc::invalid_argument, "config line " + std::to_string(line_no) + ": empty key");
    out[key] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

std::map<std::string, std::string> load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

RunConfig apply_key_values(const std::map<std::string, std::string>& kv, RunConfig cfg) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      // featurizer
      {"window_ms", [&](auto& k, auto& v) { cfg.features.window_ms = parse_number<double>(k, v); }},
      {"hop_ms", [&](auto& k, auto& v) { cfg.features.hop_ms = parse_number<double>(k, v); }},
      {"n_mels", [&](auto& k, auto& v) { cfg.features.n_mels = cfg.model.n_mels = parse_number<int>(k, v); }},
      {"chunk_length_s", [&](auto& k, auto& v) { cfg.features.chunk_length_s = parse_number<double>(k, v); }},
      {"f_min", [&](auto& k, auto& v) { cfg.features.f_min = parse_number<double>(k, v); }},
      {"f_max", [&](auto& k, auto& v) { cfg.features.f_max = parse_number<double>(k, v); }},
      {"log_floor", [&](auto& k, auto& v) { cfg.features.log_floor = parse_number<double>(k, v); }},
      {"clamp_range", [&](auto& k, auto& v) { cfg.features.clamp_range = parse_number<double>(k, v); }},
      {"affine_shift", [&](auto& k, auto& v) { cfg.features.affine_shift = parse_number<double>(k, v); }},
      {"affine_scale", [&](auto& k, auto& v) { cfg.features.affine_scale = parse_number<double>(k, v); }},
      // model
      {"d_model", [&](auto& k, auto& v) { cfg.model.d_model = parse_number<int>(k, v); }},
      {"n_layers", [&](auto& k, auto& v) { cfg.model.n_layers = parse_number<int>(k, v); }},
      {"n_heads", [&](auto& k, auto& v) { cfg.model.n_heads = parse_number<int>(k, v); }},
      {"d_ffn", [&](auto& k, auto& v) { cfg.model.d_ffn = parse_number<int>(k, v); }},
      {"max_positions", [&](auto& k, auto& v) { cfg.model.max_positions = parse_number<int>(k, v); }},
      {"d_proj", [&](auto& k, auto& v) { cfg.model.d_proj = parse_number<int>(k, v); }},
      {"norm_placement", [&](auto&, auto& v) { cfg.model.norm_placement = parse_norm_placement(v); }},
      {"ffn_activation", [&](auto&, auto& v) { cfg.model.ffn_activation = parse_activation(v); }},
      {"attention_key_bias", [&](auto& k, auto& v) { cfg.model.attention_key_bias = parse_bool(k, v); }},
      {"layer_norm_eps", [&](auto& k, auto& v) { cfg.model.layer_norm_eps = parse_number<double>(k, v); }},
      // training
      {"batch_size", [&](auto& k, auto& v) { cfg.train.batch_size = parse_number<std::size_t>(k, v); }},
      {"learning_rate", [&](auto& k, auto& v) { cfg.train.learning_rate = parse_number<double>(k, v); }},
      {"max_epochs", [&](auto& k, auto& v) { cfg.train.max_epochs = parse_number<int>(k, v); }},
      {"early_stop_patience", [&](auto& k, auto& v) { cfg.train.early_stop_patience = parse_number<int>(k, v); }},
      {"early_stop_metric", [&](auto&, auto& v) { cfg.train.early_stop_metric = parse_stop_metric(v); }},
      {"seed", [&](auto& k, auto& v) { cfg.train.seed = parse_number<std::uint64_t>(k, v); }},
      {"beta1", [&](auto& k, auto& v) { cfg.train.beta1 = parse_number<double>(k, v); }},
      {"beta2", [&](auto& k, auto& v) { cfg.train.beta2 = parse_number<double>(k, v); }},
      {"epsilon", [&](auto& k, auto& v) { cfg.train.epsilon = parse_number<double>(k, v); }},
      {"weight_decay", [&](auto& k, auto& v) { cfg.train.weight_decay = parse_number<double>(k, v); }},
      {"max_steps", [&](auto& k, auto& v) { cfg.train.max_steps = parse_number<std::uint64_t>(k, v); }},
      {"threshold", [&](auto& k, auto& v) { cfg.train.threshold = parse_number<double>(k, v); }},
      {"threads", [&](auto& k, auto& v) { cfg.train.threads = parse_number<unsigned>(k, v); }},
      {"shuffle", [&](auto& k, auto& v) { cfg.train.shuffle = parse_bool(k, v); }},
  };
  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(Errc::invalid_argument, "unknown config key '" + key + "'");
    it->second(key, value);
  }
  cfg.features.validate();
  cfg.model.validate();
  cfg.train.validate();
  return cfg;
}

std::string to_key_values(const RunConfig& c) {
  std::ostringstream os;
  os << "window_ms = " << fmt(c.features.window_ms) << "\n"
     << "hop_ms = " << fmt(c.features.hop_ms) << "\n"
     << "n_mels = " << c.model.n_mels << "\n"
     << "chunk_length_s = " << fmt(c.features.chunk_length_s) << "\n"
     << "f_min = " << fmt(c.features.f_min) << "\n"
     << "f_max = " << fmt(c.features.f_max) << "\n"
     << "log_floor = " << fmt(c.features.log_floor) << "\n"
     << "clamp_range = " << fmt(c.features.clamp_range) << "\n"
     << "affine_shift = " << fmt(c.features.affine_shift) << "\n"
     << "affine_scale = " << fmt(c.features.affine_scale) << "\n"
     << "d_model = " << c.model.d_model << "\n"
     << "n_layers = " << c.model.n_layers << "\n"
     << "n_heads = " << c.model.n_heads << "\n"
     << "d_ffn = " << c.model.d_ffn << "\n"
     << "max_positions = " << c.model.max_positions << "\n"
     << "d_proj = " << c.model.d_proj << "\n"
     << "norm_placement = " << to_string(c.model.norm_placement) << "\n"
     << "ffn_activation = " << to_string(c.model.ffn_activation) << "\n"
     << "attention_key_bias = " << (c.model.attention_key_bias ? "true" : "false") << "\n"
     << "layer_norm_eps = " << fmt(c.model.layer_norm_eps) << "\n"
     << "batch_size = " << c.train.batch_size << "\n"
     << "learning_rate = " << fmt(c.train.learning_rate) << "\n"
     << "max_epochs = " << c.train.max_epochs << "\n"
     << "early_stop_patience = " << c.train.early_stop_patience << "\n"
     << "early_stop_metric = " << to_string(c.train.early_stop_metric) << "\n"
     << "seed = " << c.train.seed << "\n"
     << "beta1 = " << fmt(c.train.beta1) << "\n"
     << "beta2 = " << fmt(c.train.beta2) << "\n"
     << "epsilon = " << fmt(c.train.epsilon) << "\n"
     << "weight_decay = " << fmt(c.train.weight_decay) << "\n"
     << "max_steps = " << c.train.max_steps << "\n"
     << "threshold = " << fmt(c.train.threshold) << "\n"
     << "threads = " << c.train.threads << "\n"
     << "shuffle = " << (c.train.shuffle ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace stutterkit
