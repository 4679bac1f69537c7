#include "stutterkit/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "stutterkit/error.hpp"

namespace stutterkit {

namespace {
constexpr const char* kFormat = "stutterkit-checkpoint";
constexpr int kVersion = 1;
}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  nlohmann::ordered_json manifest;
  manifest["format"] = kFormat;
  manifest["version"] = kVersion;
  manifest["config"]["model"] = nlohmann::ordered_json::parse(ckpt.model.to_json());
  manifest["config"]["featurizer"] = nlohmann::ordered_json::parse(ckpt.features.to_json());

  std::size_t offset = 0;
  auto tensors = nlohmann::ordered_json::array();
  for (const auto& p : ckpt.registry) {
    nlohmann::ordered_json t;
    t["name"] = p.name;
    t["shape"] = p.shape;
    t["offset"] = offset;
    t["trainable"] = p.trainable;
    t["group"] = std::string(to_string(p.group));
    t["layer"] = p.layer;
    tensors.push_back(std::move(t));
    offset += p.numel() * sizeof(float);
  }
  manifest["blob_bytes"] = offset;
  manifest["tensors"] = std::move(tensors);

  const std::string header = manifest.dump();
  std::vector<std::uint8_t> out;
  out.reserve(header.size() + 1 + offset);
  out.insert(out.end(), header.begin(), header.end());
  out.push_back('\n');
  for (const auto& p : ckpt.registry) {
    for (double v : p.values) {
      const float f = static_cast<float>(v);
      std::uint8_t raw[sizeof(float)];
      std::memcpy(raw, &f, sizeof(float));
      out.insert(out.end(), raw, raw + sizeof(float));
    }
  }
  return out;
}

namespace {

Checkpoint decode_unchecked(const std::vector<std::uint8_t>& bytes) {
  const auto newline = std::find(bytes.begin(), bytes.end(), static_cast<std::uint8_t>('\n'));
  if (newline == bytes.end()) throw Error(Errc::corrupt_file, "checkpoint header not terminated");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin(), newline);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::corrupt_file, std::string("checkpoint header: ") + e.what());
  }
  if (manifest.value("format", std::string()) != kFormat) throw Error(Errc::unsupported_format, "not a checkpoint");
  if (manifest.value("version", 0) != kVersion) throw Error(Errc::unsupported_format, "unknown checkpoint version");

  Checkpoint ckpt;
  ckpt.model = ModelConfig::from_json(manifest.at("config").at("model").dump());
  ckpt.features = FeaturizerConfig::from_json(manifest.at("config").at("featurizer").dump());
  ckpt.registry = make_registry(ckpt.model);

  const auto blob_begin = static_cast<std::size_t>(std::distance(bytes.begin(), newline)) + 1;
  const auto blob_bytes = manifest.at("blob_bytes").get<std::size_t>();
  if (bytes.size() - blob_begin != blob_bytes) throw Error(Errc::corrupt_file, "checkpoint blob size mismatch");

  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != ckpt.registry.size()) {
    throw Error(Errc::corrupt_file, "checkpoint tensor list does not match model config");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    Parameter& p = ckpt.registry[i];
    const auto& t = tensors[i];
    if (t.at("name").get<std::string>() != p.name || t.at("shape").get<std::vector<Eigen::Index>>() != p.shape) {
      throw Error(Errc::corrupt_file, "tensor " + std::to_string(i) + " does not match expected " + p.name);
    }
    const auto offset = t.at("offset").get<std::size_t>();
    if (offset + p.numel() * sizeof(float) > blob_bytes) throw Error(Errc::corrupt_file, p.name + " runs past blob");
    p.trainable = t.at("trainable").get<bool>();
    const std::uint8_t* src = bytes.data() + blob_begin + offset;
    for (std::size_t j = 0; j < p.numel(); ++j) {
      float f = 0.0f;
      std::memcpy(&f, src + j * sizeof(float), sizeof(float));
      p.values[j] = f;
    }
  }
  return ckpt;
}

}  // namespace

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  try {
    return decode_unchecked(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::corrupt_file, std::string("checkpoint header: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io_error, "short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace stutterkit
