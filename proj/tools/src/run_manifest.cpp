#include "stutterkit/run_manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "stutterkit/digest.hpp"
#include "stutterkit/error.hpp"

namespace stutterkit::cli {

void RunManifest::add_input(const std::filesystem::path& p) { inputs.push_back({p.string(), sha256_file(p)}); }

void RunManifest::add_output(const std::filesystem::path& p) { outputs.push_back({p.string(), sha256_file(p)}); }

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["tool_version"] = tool_version;
  j["config_digest"] = config_digest;
  j["seed"] = seed;
  j["timestamp"] = timestamp;
  for (auto [key, list] : {std::pair{"inputs", &inputs}, std::pair{"outputs", &outputs}}) {
    j[key] = nlohmann::ordered_json::array();
    for (const auto& a : *list) j[key].push_back({{"path", a.path}, {"sha256", a.sha256}});
  }
  return j.dump(2) + "\n";
}

void RunManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << to_json();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace stutterkit::cli
