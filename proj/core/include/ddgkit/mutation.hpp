#pragma once

#include <set>
#include <string_view>

#include "ddgkit/types.hpp"

namespace ddgkit {

// Parses codes of the form "<wt><chain><seq><mut>", e.g. "TI31W" for
// Thr31 of chain I mutated to Trp. Errors: unknown letters, missing
// digits, identical wild-type and mutant letters.
Mutation parse_mutation(std::string_view code);

// Comma-separated list of mutation codes. Duplicate sites are an error.
MutationSet parse_mutation_set(std::string_view codes);

// Returns a copy of the complex with the listed amino-acid types swapped.
// Errors: missing residue, wild-type letter disagreeing with the complex.
// Coordinates are untouched; sampling moves them separately.
Complex apply_mutation_set(const Complex& cx, const MutationSet& muts);

// Copy containing only the listed chains (binder/target labels are kept
// for the surviving chains). Used to build unbound single-side contexts.
Complex restrict_to_chains(const Complex& cx, const std::set<char>& keep);

}  // namespace ddgkit
