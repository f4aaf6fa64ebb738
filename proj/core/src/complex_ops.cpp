#include <algorithm>

#include "ddgkit/aa.hpp"
#include "ddgkit/types.hpp"

namespace ddgkit {

std::string to_string(const ResidueKey& key) {
  std::string s;
  s += key.chain_id;
  s += std::to_string(key.seq_index);
  if (key.icode != ' ') s += key.icode;
  return s;
}

const ProteinChain* Complex::find_chain(char chain_id) const {
  for (const auto& c : chains) {
    if (c.chain_id == chain_id) return &c;
  }
  return nullptr;
}

const Residue* Complex::find_residue(const ResidueKey& key) const {
  const ProteinChain* chain = find_chain(key.chain_id);
  if (chain == nullptr) return nullptr;
  for (const auto& r : chain->residues) {
    if (r.seq_index == key.seq_index && r.icode == key.icode) return &r;
  }
  return nullptr;
}

Residue* Complex::find_residue(const ResidueKey& key) {
  return const_cast<Residue*>(std::as_const(*this).find_residue(key));
}

std::size_t Complex::residue_count() const {
  std::size_t n = 0;
  for (const auto& c : chains) n += c.residues.size();
  return n;
}

std::string mutations_to_string(const MutationSet& muts) {
  MutationSet sorted = muts;
  std::sort(sorted.begin(), sorted.end(),
            [](const Mutation& a, const Mutation& b) { return a.key() < b.key(); });
  std::string out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0) out += ',';
    const Mutation& m = sorted[i];
    out += aa_to_letter(m.wt_aa);
    out += m.chain_id;
    out += std::to_string(m.seq_index);
    out += aa_to_letter(m.mut_aa);
  }
  return out;
}

}  // namespace ddgkit
