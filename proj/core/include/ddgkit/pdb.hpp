#pragma once

#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>

#include "ddgkit/types.hpp"

namespace ddgkit {

struct PdbStats {
  int atoms_kept = 0;
  int atoms_skipped_altloc = 0;     // alternate locations beyond the first
  int atoms_skipped_nonbackbone = 0;
  int residues_skipped_unknown = 0; // non-standard residue names
};

// Reads ATOM records (fixed-column PDB v3.3 layout) into chains of
// backbone residues. Only N/CA/C/O atoms are kept; residues with a
// partial backbone stay in the complex but are flagged via atom_present.
// Only the first model of multi-model files is read. Malformed records
// raise IngestError with "<source>:<line>" positions. Binder/target
// chain groups are left empty; callers assign them from record tables.
Complex parse_pdb(std::istream& in, std::string_view source,
                  PdbStats* stats = nullptr);
Complex parse_pdb(const std::filesystem::path& path, PdbStats* stats = nullptr);

// Parses structure text and assigns the binder/target chain groups.
// Every requested chain must appear in the structure, the two groups
// must not overlap, and the result must contain at least one residue.
Complex parse_pdb(const std::string& text, const std::set<char>& binder_chains,
                  const std::set<char>& target_chains,
                  std::string_view source = "<string>",
                  PdbStats* stats = nullptr);

// Applies chain groups to an already-parsed complex with the same checks.
void assign_chain_groups(Complex& cx, const std::set<char>& binder_chains,
                         const std::set<char>& target_chains);

}  // namespace ddgkit
