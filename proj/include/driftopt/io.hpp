#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftopt/common.hpp"

namespace driftopt {

inline constexpr const char* kToolVersion = "0.1.0";

/// Record of one CLI run: inputs, seed, and every produced artifact with
/// its content hash.
struct RunManifest {
  std::string command;
  std::vector<std::string> config_paths;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  std::vector<std::string> artifact_paths;  ///< relative to the manifest directory
  nlohmann::json details = nlohmann::json::object();  ///< effective settings
};

/// Writes manifest.json next to the artifacts; each listed artifact is
/// hashed at write time.
inline void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
  nlohmann::json artifacts = nlohmann::json::array();
  for (const std::string& rel : manifest.artifact_paths) {
    artifacts.push_back({{"path", rel}, {"sha256", sha256_of_file(dir / rel)}});
  }
  const nlohmann::json j{{"command", manifest.command},
                         {"tool_version", kToolVersion},
                         {"configs", manifest.config_paths},
                         {"seed", manifest.seed},
                         {"wall_time_s", manifest.wall_time_s},
                         {"details", manifest.details},
                         {"artifacts", artifacts}};
  write_text_file(dir / "run_manifest.json", j.dump(2) + "\n");
}

}  // namespace driftopt
