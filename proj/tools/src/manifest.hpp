#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace trackcull::app {

inline constexpr const char* kManifestFormat = "trackcull-manifest-v1";

/// Record of one run: enough to repeat it with `trackcull replay`.
struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  nlohmann::ordered_json timing = nlohmann::ordered_json::object();
};

/// `<output>.manifest.json`
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
/// Throws DataError subclasses on unreadable or malformed manifests.
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace trackcull::app
