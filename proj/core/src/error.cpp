#include "stutterkit/error.hpp"

namespace stutterkit {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::unsupported_format: return "UnsupportedFormat";
    case Errc::corrupt_file: return "CorruptFile";
    case Errc::io_error: return "IoError";
    case Errc::empty_clip: return "EmptyClip";
    case Errc::config_mismatch: return "ConfigMismatch";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::non_finite_input: return "NonFiniteInput";
    case Errc::non_finite_activation: return "NonFiniteActivation";
    case Errc::non_finite_gradient: return "NonFiniteGradient";
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::sample_rate_mismatch: return "SampleRateMismatch";
    case Errc::speaker_leak: return "SpeakerLeak";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::empty_set: return "EmptySet";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace stutterkit
