#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ddgkit/net.hpp"

namespace ddgkit {

// Flat binary checkpoint: 8-byte magic, u32 version, a name table
// (name, shape per entry), then the float64 payloads in table order.
// All integers and floats are little-endian; round-trips are bit-exact.
struct CheckpointEntry {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<double> data;

  std::size_t size() const;
};

void write_checkpoint(const std::filesystem::path& path,
                      const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path);

// Snapshot of the current parameter values.
std::vector<CheckpointEntry> checkpoint_entries(const ParamSet& params);
// Strict restore: every ParamSet entry must be present with an equal
// shape; extra checkpoint entries are ignored (callers may stash
// metadata such as hyperparameters alongside weights).
void load_checkpoint_into(const std::vector<CheckpointEntry>& entries,
                          ParamSet& params);

// Convenience scalar accessor for metadata entries; throws if missing.
double checkpoint_scalar(const std::vector<CheckpointEntry>& entries,
                         const std::string& name);
bool checkpoint_has(const std::vector<CheckpointEntry>& entries,
                    const std::string& name);

}  // namespace ddgkit
