#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "stutterkit/featurizer.hpp"
#include "stutterkit/model_config.hpp"
#include "stutterkit/trainer.hpp"

namespace stutterkit {

/// Plain `key = value` text; '#' starts a comment, blank lines are ignored.
std::map<std::string, std::string> parse_key_values(std::string_view text);
std::map<std::string, std::string> load_key_values(const std::filesystem::path& path);

/// Everything a CLI run can be configured with.
struct RunConfig {
  FeaturizerConfig features;
  ModelConfig model;
  TrainConfig train;
};

/// Applies known keys on top of base; n_mels sets both the featurizer and the
/// model. Unknown keys or malformed values throw InvalidArgument.
RunConfig apply_key_values(const std::map<std::string, std::string>& kv, RunConfig base = {});

/// Round-trippable rendering of every key.
std::string to_key_values(const RunConfig& cfg);

}  // namespace stutterkit
