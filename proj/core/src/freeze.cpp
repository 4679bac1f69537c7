#include "stutterkit/freeze.hpp"

#include <charconv>

#include "stutterkit/error.hpp"

namespace stutterkit {

const char* const kFreezeGrammar =
    "freeze spec grammar:\n"
    "  spec   := layers [\"+FrzFE\"] | \"FrzFE\"\n"
    "  layers := (\"Frz\" | \"UnFrz\") range {\",\" range}\n"
    "  range  := N | N\"-\"M\n"
    "examples: UnFrz0-5, UnFrz0-5+FrzFE, Frz0-2, Frz0-2+FrzFE, Frz0-4+FrzFE";

namespace {

constexpr std::string_view kFe = "FrzFE";
constexpr std::string_view kFeSuffix = "+FrzFE";

[[noreturn]] void bad(std::string_view spec, const std::string& why) {
  throw Error(Errc::invalid_argument, "bad freeze spec '" + std::string(spec) + "': " + why + "\n" + kFreezeGrammar);
}

int parse_int(std::string_view text, std::string_view spec) {
  int value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) bad(spec, "expected a layer number, got '" + std::string(text) + "'");
  return value;
}

std::set<int> parse_ranges(std::string_view body, std::string_view spec, int n_layers) {
  std::set<int> out;
  while (true) {
    const auto comma = body.find(',');
    const std::string_view range = body.substr(0, comma);
    const auto dash = range.find('-');
    const int lo = parse_int(range.substr(0, dash), spec);
    const int hi = dash == std::string_view::npos ? lo : parse_int(range.substr(dash + 1), spec);
    if (lo > hi) bad(spec, "range start exceeds end");
    if (lo < 0 || hi >= n_layers) bad(spec, "layer index out of range [0, " + std::to_string(n_layers) + ")");
    for (int i = lo; i <= hi; ++i) out.insert(i);
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return out;
}

std::string render_ranges(const std::set<int>& layers) {
  std::string out;
  auto it = layers.begin();
  while (it != layers.end()) {
    const int lo = *it;
    int hi = lo;
    ++it;
    while (it != layers.end() && *it == hi + 1) {
      hi = *it;
      ++it;
    }
    if (!out.empty()) out += ",";
    out += std::to_string(lo);
    if (hi != lo) out += "-" + std::to_string(hi);
  }
  return out;
}

}  // namespace

FreezeConfig parse_freeze_spec(std::string_view spec, int n_layers) {
  FreezeConfig cfg;
  std::string_view rest = spec;
  if (rest == kFe) {
    cfg.freeze_feature_extractor = true;
    return cfg;
  }
  if (rest.size() > kFeSuffix.size() && rest.substr(rest.size() - kFeSuffix.size()) == kFeSuffix) {
    cfg.freeze_feature_extractor = true;
    rest.remove_suffix(kFeSuffix.size());
  }
  if (rest.starts_with("UnFrz")) {
    const auto unfrozen = parse_ranges(rest.substr(5), spec, n_layers);
    for (int i = 0; i < n_layers; ++i) {
      if (!unfrozen.contains(i)) cfg.frozen_layers.insert(i);
    }
  } else if (rest.starts_with("Frz")) {
    cfg.frozen_layers = parse_ranges(rest.substr(3), spec, n_layers);
  } else {
    bad(spec, "must start with Frz, UnFrz or be FrzFE");
  }
  return cfg;
}

std::string to_freeze_spec(const FreezeConfig& cfg, int n_layers) {
  std::string out;
  if (cfg.frozen_layers.empty()) {
    if (n_layers == 0) return cfg.freeze_feature_extractor ? std::string(kFe) : std::string("UnFrz");
    out = "UnFrz0";
    if (n_layers > 1) out += "-" + std::to_string(n_layers - 1);
  } else {
    out = "Frz" + render_ranges(cfg.frozen_layers);
  }
  if (cfg.freeze_feature_extractor) out += kFeSuffix;
  return out;
}

const std::vector<std::string>& reference_freeze_specs() {
  static const std::vector<std::string> specs = {
      "UnFrz0-5",     "UnFrz0-5+FrzFE", "Frz0-2",       "Frz0-2+FrzFE",
      "Frz0-3+FrzFE", "Frz0-4+FrzFE",   "Frz0-5+FrzFE",
  };
  return specs;
}

}  // namespace stutterkit
