#include <doctest.h>

#include <cstring>

#include "fixtures.hpp"
#include "stutterkit/csv.hpp"
#include "stutterkit/digest.hpp"
#include "stutterkit/error.hpp"
#include "stutterkit/wav.hpp"

using namespace stutterkit;

namespace {

// Minimal canonical RIFF/WAVE writer kept independent of the library encoder.
std::vector<std::uint8_t> make_wav(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                                   std::uint16_t bits, const std::vector<std::int16_t>& samples) {
  std::vector<std::uint8_t> out;
  const auto put = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  };
  const auto u32 = [&](std::uint32_t v) { put(&v, 4); };
  const auto u16 = [&](std::uint16_t v) { put(&v, 2); };
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  put("RIFF", 4);
  u32(36 + data_bytes);
  put("WAVE", 4);
  put("fmt ", 4);
  u32(16);
  u16(format);
  u16(channels);
  u32(rate);
  u32(rate * channels * bits / 8);
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(bits);
  put("data", 4);
  u32(data_bytes);
  put(samples.data(), data_bytes);
  return out;
}

Errc code_of(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_wav(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode_wav accepted invalid input");
  return Errc::invalid_argument;
}

}  // namespace

TEST_CASE("decode scales by 1/32768") {
  const auto clip = decode_wav(make_wav(1, 1, 16000, 16, {0, 16384, -32768, 32767}));
  REQUIRE(clip.samples.size() == 4);
  CHECK(clip.samples[0] == 0.0f);
  CHECK(clip.samples[1] == 0.5f);
  CHECK(clip.samples[2] == -1.0f);
  CHECK(clip.samples[3] == doctest::Approx(32767.0 / 32768.0));
  CHECK(clip.sample_rate == 16000);
  CHECK(clip.duration_s() == doctest::Approx(4.0 / 16000.0));
}

TEST_CASE("unsupported and corrupt inputs") {
  CHECK(code_of(make_wav(3, 1, 16000, 16, {1, 2})) == Errc::unsupported_format);
  CHECK(code_of(make_wav(1, 2, 16000, 16, {1, 2})) == Errc::unsupported_format);
  CHECK(code_of(make_wav(1, 1, 44100, 16, {1, 2})) == Errc::unsupported_format);
  CHECK(code_of(make_wav(1, 1, 16000, 8, {1, 2})) == Errc::unsupported_format);
  auto truncated = make_wav(1, 1, 16000, 16, {1, 2, 3, 4});
  truncated.resize(truncated.size() - 3);
  CHECK(code_of(truncated) == Errc::corrupt_file);
  CHECK(code_of({'R', 'I', 'F', 'F'}) == Errc::corrupt_file);
  std::vector<std::uint8_t> junk(64, 'x');
  CHECK(code_of(junk) == Errc::unsupported_format);
}

TEST_CASE("extra chunks before data are skipped") {
  auto bytes = make_wav(1, 1, 16000, 16, {100, -100});
  const std::uint8_t list_chunk[] = {'L', 'I', 'S', 'T', 3, 0, 0, 0, 'a', 'b', 'c', 0};
  bytes.insert(bytes.begin() + 36, std::begin(list_chunk), std::end(list_chunk));
  const auto clip = decode_wav(bytes);
  REQUIRE(clip.samples.size() == 2);
  CHECK(clip.samples[0] == doctest::Approx(100.0 / 32768.0));
}

TEST_CASE("encode then decode is the identity on the 16-bit grid") {
  AudioClip clip;
  for (int i = -5; i <= 5; ++i) clip.samples.push_back(static_cast<float>(i * 1000) / 32768.0f);
  clip.samples.push_back(2.0f);  // clipped
  const auto back = decode_wav(encode_wav(clip));
  REQUIRE(back.samples.size() == clip.samples.size());
  for (std::size_t i = 0; i + 1 < clip.samples.size(); ++i) CHECK(back.samples[i] == clip.samples[i]);
  CHECK(back.samples.back() == doctest::Approx(32767.0 / 32768.0));
}

TEST_CASE("load_wav names the clip after the file") {
  fixtures::TempDir dir;
  save_wav(dir / "ep1_0007.wav", fixtures::tone({440.0}, 0.1));
  const auto clip = load_wav(dir / "ep1_0007.wav");
  CHECK(clip.clip_id == "ep1_0007");
  CHECK(clip.samples.size() == 1600);
  CHECK_THROWS_AS(load_wav(dir / "missing.wav"), Error);
}

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex(std::string_view("")) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex(std::string_view("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fixtures::TempDir dir;
  fixtures::write_file(dir / "f", "abc");
  CHECK(sha256_file(dir / "f") == sha256_hex(std::string_view("abc")));
}

TEST_CASE("csv quoting round trip") {
  CsvTable t;
  t.header = {"id", "json", "note"};
  t.rows = {{"a", R"({"Music": 3, "NaturalPause": 1})", "plain"}, {"b", "", "with \"quotes\"\nand newline"}};
  const auto back = parse_csv(to_csv(t));
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.column("note") == 2);
  CHECK_THROWS_AS(back.column("nope"), Error);
  CHECK(parse_csv("x,y\r\n1,2\r\n").rows == std::vector<std::vector<std::string>>{{"1", "2"}});
  CHECK_THROWS_AS(parse_csv("x,y\n1\n"), Error);
  CHECK_THROWS_AS(parse_csv("x\n\"open\n"), Error);
}
