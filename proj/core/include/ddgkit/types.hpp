#pragma once

#include <Eigen/Core>
#include <array>
#include <compare>
#include <set>
#include <string>
#include <vector>

namespace ddgkit {

// Backbone atoms carried per residue, in fixed order.
enum class BackboneAtom : int { N = 0, CA = 1, C = 2, O = 3 };
inline constexpr int kBackboneAtoms = 4;
inline constexpr std::array<const char*, 4> kBackboneAtomNames = {"N", "CA",
                                                                  "C", "O"};

// Identifies a residue within a complex. Ordering (chain, seq index,
// insertion code) is the canonical tie-break order used throughout.
struct ResidueKey {
  char chain_id = ' ';
  int seq_index = 0;
  char icode = ' ';

  auto operator<=>(const ResidueKey&) const = default;
};

std::string to_string(const ResidueKey& key);

struct Residue {
  int aa_type = 0;  // 1..20, see aa.hpp
  char chain_id = ' ';
  int seq_index = 0;
  char icode = ' ';
  std::array<Eigen::Vector3d, 4> backbone{};  // N, CA, C, O
  std::array<bool, 4> atom_present{};

  ResidueKey key() const { return {chain_id, seq_index, icode}; }
  bool has_full_backbone() const {
    return atom_present[0] && atom_present[1] && atom_present[2] &&
           atom_present[3];
  }
  bool has_ca() const { return atom_present[1]; }
  const Eigen::Vector3d& ca() const {
    return backbone[static_cast<int>(BackboneAtom::CA)];
  }
};

struct ProteinChain {
  char chain_id = ' ';
  std::vector<Residue> residues;  // file order
};

// A complex plus its binder/target chain partition. Chains not listed in
// either group are allowed in the file but take no part in modeling.
struct Complex {
  std::string pdb_id;
  std::vector<ProteinChain> chains;
  std::set<char> binder_chains;
  std::set<char> target_chains;

  const ProteinChain* find_chain(char chain_id) const;
  // Null if the residue does not exist.
  const Residue* find_residue(const ResidueKey& key) const;
  Residue* find_residue(const ResidueKey& key);
  bool in_binder(char chain_id) const { return binder_chains.count(chain_id) > 0; }
  bool in_target(char chain_id) const { return target_chains.count(chain_id) > 0; }
  std::size_t residue_count() const;
};

struct Mutation {
  int wt_aa = 0;
  char chain_id = ' ';
  int seq_index = 0;
  int mut_aa = 0;

  // Mutations address residues with a blank insertion code.
  ResidueKey key() const { return {chain_id, seq_index, ' '}; }
};

using MutationSet = std::vector<Mutation>;

struct SkempiRecord {
  std::string pdb_id;
  std::set<char> binder_chains;
  std::set<char> target_chains;
  MutationSet mutations;
  double ddg_label = 0.0;
  // Complexes are the unit of fold assignment; records from the same PDB
  // entry share a split key.
  std::string split_key;
};

// Canonical "A,B,.." text form for a mutation set (sorted by residue key).
std::string mutations_to_string(const MutationSet& muts);

}  // namespace ddgkit
