#include "stutterkit/labels.hpp"

namespace stutterkit {

namespace {
constexpr std::array<std::string_view, kNumClasses> kNames = {
    "Block", "Interjection", "Prolongation", "SoundRep", "WordRep", "NoStutteredWords"};
}

std::string_view label_name(Label label) noexcept { return kNames[index_of(label)]; }

std::optional<Label> parse_label(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (kNames[i] == name) return static_cast<Label>(i);
  }
  return std::nullopt;
}

std::string to_bit_string(const LabelVector& v) {
  std::string out(kNumClasses, '0');
  for (std::size_t i = 0; i < kNumClasses; ++i) out[i] = v[i] ? '1' : '0';
  return out;
}

}  // namespace stutterkit
