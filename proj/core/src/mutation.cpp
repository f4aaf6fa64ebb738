#include "ddgkit/mutation.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <string>

#include "ddgkit/aa.hpp"
#include "ddgkit/error.hpp"

namespace ddgkit {

Mutation parse_mutation(std::string_view code) {
  if (code.size() < 4) {
    throw IngestError("mutation code too short: '" + std::string(code) + "'");
  }
  Mutation m;
  m.wt_aa = aa_from_letter(code[0]);
  m.chain_id = code[1];
  const std::string_view digits = code.substr(2, code.size() - 3);
  if (digits.empty() ||
      !std::all_of(digits.begin(), digits.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) != 0;
      })) {
    throw IngestError("mutation code has malformed position: '" +
                      std::string(code) + "'");
  }
  const auto* end = digits.data() + digits.size();
  std::from_chars(digits.data(), end, m.seq_index);
  m.mut_aa = aa_from_letter(code.back());
  if (m.wt_aa == m.mut_aa) {
    throw IngestError("mutation code maps a residue to itself: '" +
                      std::string(code) + "'");
  }
  return m;
}

MutationSet parse_mutation_set(std::string_view codes) {
  MutationSet muts;
  std::set<ResidueKey> seen;
  std::size_t start = 0;
  while (start <= codes.size()) {
    std::size_t comma = codes.find(',', start);
    if (comma == std::string_view::npos) comma = codes.size();
    const std::string_view code = codes.substr(start, comma - start);
    if (code.empty()) {
      throw IngestError("empty mutation code in list: '" + std::string(codes) +
                        "'");
    }
    Mutation m = parse_mutation(code);
    if (!seen.insert(m.key()).second) {
      throw IngestError("duplicate mutation site " + to_string(m.key()) +
                        " in list: '" + std::string(codes) + "'");
    }
    muts.push_back(m);
    start = comma + 1;
    if (comma == codes.size()) break;
  }
  return muts;
}

Complex apply_mutation_set(const Complex& cx, const MutationSet& muts) {
  Complex out = cx;
  for (const Mutation& m : muts) {
    Residue* r = out.find_residue(m.key());
    if (r == nullptr) {
      throw IngestError("mutation site " + to_string(m.key()) +
                        " not present in complex " + cx.pdb_id);
    }
    if (r->aa_type != m.wt_aa) {
      throw IngestError("wild-type mismatch at " + to_string(m.key()) +
                        " in complex " + cx.pdb_id + ": complex has " +
                        std::string(1, aa_to_letter(r->aa_type)) +
                        ", mutation says " +
                        std::string(1, aa_to_letter(m.wt_aa)));
    }
    r->aa_type = m.mut_aa;
  }
  return out;
}

Complex restrict_to_chains(const Complex& cx, const std::set<char>& keep) {
  Complex out;
  out.pdb_id = cx.pdb_id;
  for (const auto& chain : cx.chains) {
    if (keep.count(chain.chain_id) > 0) out.chains.push_back(chain);
  }
  for (char c : cx.binder_chains) {
    if (keep.count(c) > 0) out.binder_chains.insert(c);
  }
  for (char c : cx.target_chains) {
    if (keep.count(c) > 0) out.target_chains.insert(c);
  }
  return out;
}

}  // namespace ddgkit
