#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace stutterkit::cli {

struct Artifact {
  std::string path;
  std::string sha256;
};

/// Provenance record written next to every command's outputs. The timestamp
/// is the only field that differs between otherwise identical runs.
struct RunManifest {
  std::string command;
  std::string tool_version;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string timestamp;
  std::vector<Artifact> inputs;
  std::vector<Artifact> outputs;

  void add_input(const std::filesystem::path& p);
  void add_output(const std::filesystem::path& p);

  std::string to_json() const;
  void save(const std::filesystem::path& path) const;
};

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace stutterkit::cli
