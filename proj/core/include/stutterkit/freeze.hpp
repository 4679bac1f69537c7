#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace stutterkit {

/// Which encoder layers (and whether the conv stem + positional table) are
/// excluded from updates. The classifier head is always trainable.
struct FreezeConfig {
  std::set<int> frozen_layers;
  bool freeze_feature_extractor = false;

  bool operator==(const FreezeConfig&) const = default;
};

/// Parses the experiment labels used in the result tables:
///
///   spec    := layers [ "+FrzFE" ] | "FrzFE"
///   layers  := ("Frz" | "UnFrz") range
///   range   := N | N "-" M
///
/// "Frz0-2" freezes layers 0..2; "UnFrz0-5" leaves 0..5 trainable and freezes
/// every other layer. Throws InvalidArgument with a grammar reminder.
FreezeConfig parse_freeze_spec(std::string_view spec, int n_layers);

/// Canonical label for a config ("Frz0-4+FrzFE", "UnFrz0-5", ...).
std::string to_freeze_spec(const FreezeConfig& cfg, int n_layers);

extern const char* const kFreezeGrammar;

/// The seven configurations reported for the six-layer base encoder.
const std::vector<std::string>& reference_freeze_specs();

}  // namespace stutterkit
