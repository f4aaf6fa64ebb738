#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

#include "ddgkit/types.hpp"

namespace ddgkit {

// A residue participating in a neighborhood. aa_type and group flags are
// snapshots of the source complex at selection time, so wild-type and
// mutant variants of the same sites produce structurally identical
// neighborhoods that differ only in aa_type.
struct NeighborEntry {
  ResidueKey key;
  int aa_type = 0;
  bool is_binder = false;
  bool is_target = false;
  bool is_site = false;
  std::array<Eigen::Vector3d, 4> backbone{};
};

// Mutation sites plus their spatial context. Members are sorted by
// ResidueKey, which fixes the coordinate layout: atom (m, a) lives at
// flat index 4*m + a with a in N, CA, C, O order.
struct Neighborhood {
  std::vector<NeighborEntry> members;

  std::size_t member_count() const { return members.size(); }
  std::size_t atom_count() const { return members.size() * kBackboneAtoms; }
  std::vector<ResidueKey> site_keys() const;
  std::vector<ResidueKey> neighbor_keys() const;
  // Flat coordinate view (4 atoms per member, member order).
  std::vector<Eigen::Vector3d> coords() const;
  // Per-atom flags: true for atoms of mutation-site residues.
  std::vector<bool> movable_atoms() const;
  // Index of the member with this key, or member_count() if absent.
  std::size_t member_index(const ResidueKey& key) const;
};

// k nearest residues per site by CA-CA distance, ties broken by
// (chain_id, seq_index, insertion code) ascending; union over sites;
// sites never appear in their own neighbor lists. Candidate residues
// need a complete backbone; sites themselves must have one too.
Neighborhood select_neighborhood(const Complex& cx, const MutationSet& muts,
                                 int k);
// Same selection around explicit residue keys (used by the sequence
// model, where the "site" is a masked query position).
Neighborhood select_neighborhood_sites(const Complex& cx,
                                       const std::vector<ResidueKey>& sites,
                                       int k);

// Gaussian radial basis: out[m] = exp(-(d - mu_m)^2 / (2 gamma^2)).
void rbf_expand(double d, std::span<const double> centers, double gamma,
                std::span<double> out);

struct RbfSpec {
  int n_rbf = 16;
  double r_max = 20.0;  // Angstrom

  double gamma() const { return r_max / n_rbf; }
  // n_rbf centers evenly spaced on [0, r_max], endpoints included.
  std::vector<double> centers() const;
};

// Distances are clamped to spec.r_max before expansion.
void rbf_expand(double d, const RbfSpec& spec, std::span<double> out);

// Atom-pair orderings used by the feature blocks below.
inline constexpr int kInterAtomPairs = 16;  // (a of i, b of j), a*4+b
inline constexpr int kIntraAtomPairs = 6;   // (0,1),(0,2),(0,3),(1,2),(1,3),(2,3)
extern const std::array<std::pair<int, int>, kIntraAtomPairs> kIntraPairs;

// SE(3)-invariant features of a neighborhood. All blocks are functions
// of inter-atomic distances, amino-acid identity, and chain-group
// membership only, so a global rotation + translation leaves them
// unchanged up to roundoff.
struct InvariantFeatures {
  int n_members = 0;
  int n_rbf = 0;
  // Row i*n+j (i != j): RBF expansions of the 16 backbone atom-pair
  // distances between members i and j, blocks ordered (a of i, b of j).
  // Diagonal rows are zero.
  Eigen::MatrixXd inter;  // (n*n) x (16*n_rbf)
  // Row i: expansions of the 6 intra-residue atom-pair distances.
  Eigen::MatrixXd intra;  // n x (6*n_rbf)
  Eigen::MatrixXd aa_onehot;  // n x 20
  Eigen::MatrixXd group;      // n x 2, columns (binder, target)
};

InvariantFeatures featurize(const Neighborhood& neigh, const RbfSpec& spec);
// Same, but with coordinates overriding the neighborhood snapshot
// (layout must match neigh.coords()).
InvariantFeatures featurize_at(const Neighborhood& neigh, const RbfSpec& spec,
                               std::span<const Eigen::Vector3d> coords);

}  // namespace ddgkit
