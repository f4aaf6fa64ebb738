#include "ddgkit/manifest.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "ddgkit/error.hpp"

namespace ddgkit {

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["config"] = nlohmann::json::parse(config_to_json(m.config));
  j["config_hash"] = config_hash_hex(m.config);
  j["seed"] = m.seed;
  j["version"] = m.version;

  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing manifest: " + path.string());
}

}  // namespace ddgkit
