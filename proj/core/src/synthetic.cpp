#include "ddgkit/synthetic.hpp"

#include "ddgkit/aa.hpp"
#include "ddgkit/rng.hpp"

namespace ddgkit {

namespace {

Residue make_residue(char chain, int seq, int aa, const Eigen::Vector3d& ca,
                     double jitter, Rng& rng) {
  Residue r;
  r.aa_type = aa;
  r.chain_id = chain;
  r.seq_index = seq;
  r.icode = ' ';
  // Idealized local offsets from CA, roughly bond-length sized.
  const std::array<Eigen::Vector3d, 4> offset = {
      Eigen::Vector3d(-1.46, 0.30, 0.20),  // N
      Eigen::Vector3d(0.0, 0.0, 0.0),      // CA
      Eigen::Vector3d(1.52, 0.40, -0.10),  // C
      Eigen::Vector3d(2.00, 1.45, 0.10),   // O
  };
  for (int a = 0; a < kBackboneAtoms; ++a) {
    Eigen::Vector3d noise(rng.normal(), rng.normal(), rng.normal());
    r.backbone[static_cast<std::size_t>(a)] =
        ca + offset[static_cast<std::size_t>(a)] + jitter * noise;
    r.atom_present[static_cast<std::size_t>(a)] = true;
  }
  return r;
}

}  // namespace

Complex make_synthetic_complex(const SyntheticSpec& spec) {
  Rng rng(spec.seed);
  Complex cx;
  cx.pdb_id = spec.pdb_id;
  cx.binder_chains = {'A'};
  cx.target_chains = {'B'};

  ProteinChain binder;
  binder.chain_id = 'A';
  for (int i = 0; i < spec.n_binder; ++i) {
    const Eigen::Vector3d ca(spec.spacing * i, 0.0, 0.0);
    const int aa = rng.uniform_int(1, kNumAminoAcids);
    binder.residues.push_back(
        make_residue('A', i + 1, aa, ca, spec.jitter, rng));
  }
  cx.chains.push_back(std::move(binder));

  ProteinChain target;
  target.chain_id = 'B';
  for (int j = 0; j < spec.n_target; ++j) {
    // Offset half a step so the strands interdigitate.
    const Eigen::Vector3d ca(spec.spacing * j + spec.spacing / 2.0,
                             spec.separation, 0.0);
    const int aa = rng.uniform_int(1, kNumAminoAcids);
    target.residues.push_back(
        make_residue('B', j + 1, aa, ca, spec.jitter, rng));
  }
  cx.chains.push_back(std::move(target));
  return cx;
}

}  // namespace ddgkit
