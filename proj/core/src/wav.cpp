#include "stutterkit/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include "stutterkit/error.hpp"

namespace stutterkit {

namespace {

constexpr std::uint16_t kFormatPcm = 1;

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

struct FmtChunk {
  std::uint16_t audio_format;
  std::uint16_t channels;
  std::uint32_t sample_rate;
  std::uint16_t bits_per_sample;
};

}  // namespace

AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw Error(Errc::corrupt_file, "file shorter than RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(Errc::unsupported_format, "not a RIFF/WAVE file");
  }

  std::optional<FmtChunk> fmt;
  std::optional<std::span<const std::uint8_t>> data;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    const std::uint32_t size = read_u32(hdr + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) {
      throw Error(Errc::corrupt_file, "chunk '" + std::string(reinterpret_cast<const char*>(hdr), 4) +
                                          "' runs past end of file");
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16) throw Error(Errc::corrupt_file, "fmt chunk too small");
      const std::uint8_t* f = bytes.data() + body;
      fmt = FmtChunk{read_u16(f), read_u16(f + 2), read_u32(f + 4), read_u16(f + 14)};
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.subspan(body, size);
    }
    // chunks are word aligned
    pos = body + size + (size & 1U);
  }

  if (!fmt) throw Error(Errc::corrupt_file, "missing fmt chunk");
  if (!data) throw Error(Errc::corrupt_file, "missing data chunk");
  if (fmt->audio_format != kFormatPcm || fmt->bits_per_sample != 16) {
    throw Error(Errc::unsupported_format, "only 16-bit integer PCM is supported");
  }
  if (fmt->channels != 1) {
    throw Error(Errc::unsupported_format, "expected mono, got " + std::to_string(fmt->channels) + " channels");
  }
  if (fmt->sample_rate != static_cast<std::uint32_t>(kSampleRate)) {
    throw Error(Errc::unsupported_format, "expected 16000 Hz, got " + std::to_string(fmt->sample_rate));
  }
  if (data->size() % 2 != 0) throw Error(Errc::corrupt_file, "odd-sized 16-bit data chunk");

  AudioClip clip;
  clip.sample_rate = kSampleRate;
  clip.samples.resize(data->size() / 2);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    const auto raw = static_cast<std::int16_t>(read_u16(data->data() + 2 * i));
    clip.samples[i] = static_cast<float>(raw) / 32768.0f;
  }
  return clip;
}

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  AudioClip clip;
  try {
    clip = decode_wav(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
  clip.clip_id = path.stem().string();
  return clip;
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (float s : clip.samples) {
    const float scaled = std::nearbyint(s * 32768.0f);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0f, 32767.0f));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

void save_wav(const std::filesystem::path& path, const AudioClip& clip) {
  const auto bytes = encode_wav(clip);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace stutterkit
