#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ddgkit/config.hpp"

namespace ddgkit {

// Written next to every command's outputs. Deliberately timestamp-free:
// rerunning with the same config and seed must reproduce the output
// directory bitwise.
struct Manifest {
  std::string command;
  RunConfig config;  // after CLI overrides
  std::uint64_t seed = 0;
  std::string version;
};

void write_manifest(const std::filesystem::path& path, const Manifest& m);

}  // namespace ddgkit
