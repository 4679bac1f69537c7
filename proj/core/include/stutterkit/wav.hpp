#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace stutterkit {

inline constexpr int kSampleRate = 16000;

/// Mono PCM audio plus provenance. Samples are in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kSampleRate;
  std::string clip_id;
  std::string episode_id;
  std::string speaker_id;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

/// Decodes a RIFF/WAVE byte image. Only 16-bit PCM, mono, 16 kHz is accepted;
/// anything else throws UnsupportedFormat, truncated chunks throw CorruptFile.
AudioClip decode_wav(std::span<const std::uint8_t> bytes);

/// Reads and decodes a file. clip_id defaults to the file stem; episode and
/// speaker stay empty unless the caller fills them from a manifest.
AudioClip load_wav(const std::filesystem::path& path);

/// 16-bit PCM encoding; samples are scaled by 32768 and saturated.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);
void save_wav(const std::filesystem::path& path, const AudioClip& clip);

}  // namespace stutterkit
