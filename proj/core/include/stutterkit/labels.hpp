#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace stutterkit {

inline constexpr std::size_t kNumClasses = 6;

/// Fixed class order shared by the classifier rows, manifests and reports.
enum class Label : std::size_t {
  block = 0,
  interjection = 1,
  prolongation = 2,
  sound_rep = 3,
  word_rep = 4,
  no_stuttered_words = 5,
};

inline constexpr std::array<Label, kNumClasses> kAllLabels = {
    Label::block,    Label::interjection, Label::prolongation,
    Label::sound_rep, Label::word_rep,    Label::no_stuttered_words};

/// Canonical names as they appear in manifests: Block, Interjection, ...
std::string_view label_name(Label label) noexcept;
std::optional<Label> parse_label(std::string_view name) noexcept;

inline constexpr std::size_t index_of(Label label) noexcept {
  return static_cast<std::size_t>(label);
}

inline constexpr bool is_disfluency(Label label) noexcept {
  return label != Label::no_stuttered_words;
}

/// Multi-hot target over the six classes.
class LabelVector {
 public:
  constexpr LabelVector() = default;
  constexpr explicit LabelVector(std::array<bool, kNumClasses> bits) : bits_(bits) {}

  static LabelVector single(Label label) {
    LabelVector v;
    v.set(label);
    return v;
  }

  constexpr bool operator[](std::size_t i) const { return bits_[i]; }
  constexpr bool test(Label label) const { return bits_[index_of(label)]; }
  constexpr void set(Label label, bool value = true) { bits_[index_of(label)] = value; }
  constexpr void set(std::size_t i, bool value = true) { bits_[i] = value; }

  constexpr std::size_t count() const {
    std::size_t n = 0;
    for (bool b : bits_) n += b ? 1 : 0;
    return n;
  }

  /// NoStutteredWords excludes every disfluency bit.
  constexpr bool is_consistent() const {
    if (!test(Label::no_stuttered_words)) return true;
    return count() == 1;
  }

  constexpr LabelVector operator|(const LabelVector& other) const {
    LabelVector out;
    for (std::size_t i = 0; i < kNumClasses; ++i) out.bits_[i] = bits_[i] || other.bits_[i];
    return out;
  }

  constexpr const std::array<bool, kNumClasses>& bits() const { return bits_; }
  constexpr bool operator==(const LabelVector&) const = default;

 private:
  std::array<bool, kNumClasses> bits_{};
};

/// "101001"-style rendering in class order.
std::string to_bit_string(const LabelVector& v);

}  // namespace stutterkit
