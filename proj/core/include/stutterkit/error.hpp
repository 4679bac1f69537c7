#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stutterkit {

enum class Errc {
  unsupported_format,
  corrupt_file,
  io_error,
  empty_clip,
  config_mismatch,
  shape_mismatch,
  non_finite_input,
  non_finite_activation,
  non_finite_gradient,
  empty_dataset,
  sample_rate_mismatch,
  speaker_leak,
  length_mismatch,
  empty_set,
  invalid_argument,
};

std::string_view to_string(Errc code) noexcept;

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace stutterkit
