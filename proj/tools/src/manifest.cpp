#include "manifest.hpp"

#include <fstream>
#include <sstream>

#include <trackcull/error.hpp>
#include <trackcull/version.hpp>

namespace trackcull::app {

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  std::filesystem::path path = output;
  path += ".manifest.json";
  return path;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["format"] = kManifestFormat;
  doc["tool"] = "trackcull";
  doc["version"] = kVersion;
  doc["command"] = manifest.command;
  doc["argv"] = manifest.argv;
  doc["config"] = manifest.config;
  doc["inputs"] = manifest.inputs;
  doc["outputs"] = manifest.outputs;
  doc["timing"] = manifest.timing;

  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(buffer.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), 0, path.string());
  }
  if (!doc.is_object() || doc.value("format", "") != kManifestFormat) {
    throw ValidationError(path.string() + " is not a trackcull manifest");
  }
  try {
    Manifest manifest;
    manifest.command = doc.at("command").get<std::string>();
    manifest.argv = doc.at("argv").get<std::vector<std::string>>();
    manifest.config = doc.value("config", nlohmann::ordered_json::object());
    manifest.inputs = doc.value("inputs", std::vector<std::string>{});
    manifest.outputs = doc.value("outputs", std::vector<std::string>{});
    manifest.timing = doc.value("timing", nlohmann::ordered_json::object());
    return manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace trackcull::app
