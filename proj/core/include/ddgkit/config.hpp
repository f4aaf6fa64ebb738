#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ddgkit/ddg.hpp"
#include "ddgkit/dsm.hpp"
#include "ddgkit/energy.hpp"
#include "ddgkit/sampler.hpp"

namespace ddgkit {

// Everything a run needs, loadable from one JSON file. Unset paths stay
// empty; each command validates the subset it actually uses.
struct RunConfig {
  struct Paths {
    std::string structures_dir;
    std::string skempi_csv;
    std::string logprob_file;
    std::string checkpoint;
    std::string out_dir = "runs";
  } paths;

  EnergyModelConfig model;
  int k_neighborhood = 8;
  DsmConfig dsm;
  LangevinConfig langevin;
  TrainDdgConfig train;

  struct Folds {
    int n_folds = 3;
    double val_frac = 0.1;
    int fold = -1;  // -1 = all folds
  } folds;

  std::uint64_t seed = 0;
};

// Strict JSON parsing: unknown keys anywhere are an error listing every
// offender; type mismatches name the field.
RunConfig parse_config_json(const std::string& text, const std::string& source);
RunConfig load_config(const std::filesystem::path& path);

// Re-derives the nested knobs (training/dsm/langevin seeds, the copy of
// the Langevin settings inside the training config) from the shared
// fields. Parsing does this; call it again after mutating a config.
void wire_config(RunConfig& cfg);

// Canonical serialization (sorted keys, fixed layout). Hashing this
// string keys the per-run output directory.
std::string config_to_json(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);

// Returns a description of every invalid field: required paths that are
// empty or missing on disk, plus out-of-range numerics. Empty result
// means the config is usable for a command needing `required_paths`.
std::vector<std::string> validate_config(
    const RunConfig& cfg, std::span<const std::string> required_paths);

}  // namespace ddgkit
