#pragma once

#include <cstdint>

#include "ddgkit/types.hpp"

namespace ddgkit {

// Deterministic synthetic complexes for self-checks and benchmarks: two
// facing strands with plausible backbone geometry and seeded jitter.
// Chain A is the binder, chain B the target.
struct SyntheticSpec {
  int n_binder = 6;
  int n_target = 6;
  std::uint64_t seed = 0;
  double spacing = 3.8;    // CA-CA step along each strand, Angstrom
  double separation = 5.0; // strand-to-strand distance, Angstrom
  double jitter = 0.15;    // per-coordinate Gaussian noise, Angstrom
  std::string pdb_id = "synth";
};

Complex make_synthetic_complex(const SyntheticSpec& spec);

}  // namespace ddgkit
