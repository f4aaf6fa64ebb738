#pragma once

#include <string_view>

namespace ddgkit {

// Amino-acid types are integers in 1..20, assigned alphabetically by
// one-letter code: A=1, C=2, D=3, ... Y=20. Index 0 means "unknown".
inline constexpr int kNumAminoAcids = 20;

// Throws IngestError for characters outside the 20-letter alphabet.
int aa_from_letter(char c);
char aa_to_letter(int aa);

// Three-letter residue names as found in PDB files ("ALA", "CYS", ...).
// Returns 0 for names outside the standard 20 (callers decide whether to
// skip or fail).
int aa_try_from_three_letter(std::string_view name);

}  // namespace ddgkit
