#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stutterkit/featurizer.hpp"
#include "stutterkit/model_config.hpp"
#include "stutterkit/registry.hpp"

namespace stutterkit {

struct Checkpoint {
  ModelConfig model;
  FeaturizerConfig features;
  ParameterRegistry registry;
};

/// Layout: one line of JSON
///   {"format":"stutterkit-checkpoint","version":1,"config":{"model":..,"featurizer":..},
///    "blob_bytes":N,"tensors":[{"name","shape","offset","trainable","group","layer"},...]}
/// then '\n' and one blob of little-endian f32 values in tensor order.
/// Offsets are in bytes from the start of the blob.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace stutterkit
