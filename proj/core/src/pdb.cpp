#include "ddgkit/pdb.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "ddgkit/aa.hpp"
#include "ddgkit/error.hpp"

namespace ddgkit {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

// Columns are 1-based inclusive, as in the PDB format description.
std::string_view field(const std::string& line, int first, int last) {
  const auto begin = static_cast<std::size_t>(first - 1);
  const auto len = static_cast<std::size_t>(last - first + 1);
  if (line.size() < begin + len) return {};
  return std::string_view(line).substr(begin, len);
}

double parse_coord(std::string_view raw, std::string_view source, int lineno,
                   const char* what) {
  const std::string_view s = trim(raw);
  double value = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end || s.empty()) {
    throw IngestError(std::string(source) + ":" + std::to_string(lineno) +
                      ": malformed " + what + " coordinate '" +
                      std::string(raw) + "'");
  }
  return value;
}

int parse_seq(std::string_view raw, std::string_view source, int lineno) {
  const std::string_view s = trim(raw);
  int value = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end || s.empty()) {
    throw IngestError(std::string(source) + ":" + std::to_string(lineno) +
                      ": malformed residue sequence number '" +
                      std::string(raw) + "'");
  }
  return value;
}

int backbone_index(std::string_view atom_name) {
  for (int a = 0; a < kBackboneAtoms; ++a) {
    if (atom_name == kBackboneAtomNames[static_cast<std::size_t>(a)]) return a;
  }
  return -1;
}

}  // namespace

Complex parse_pdb(std::istream& in, std::string_view source, PdbStats* stats) {
  Complex cx;
  PdbStats local;
  PdbStats& st = stats != nullptr ? *stats : local;
  st = PdbStats{};

  // (chain, seq, icode) -> (chain index, residue index).
  std::map<ResidueKey, std::pair<std::size_t, std::size_t>> residue_index;
  std::set<ResidueKey> skipped_residues;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view rec = field(line, 1, 6);
    if (rec == "ENDMDL") break;  // first model only
    if (rec != "ATOM  ") continue;
    if (line.size() < 54) {
      throw IngestError(std::string(source) + ":" + std::to_string(lineno) +
                        ": ATOM record shorter than coordinate fields");
    }

    const std::string_view atom_name = trim(field(line, 13, 16));
    const char altloc = line[16];
    const std::string res_name(trim(field(line, 18, 20)));
    const char chain_id = line[21];
    const int seq = parse_seq(field(line, 23, 26), source, lineno);
    const char icode = line[26];
    const ResidueKey key{chain_id, seq, icode};

    if (skipped_residues.count(key) > 0) continue;
    const int aa = aa_try_from_three_letter(res_name);
    if (aa == 0) {
      skipped_residues.insert(key);
      ++st.residues_skipped_unknown;
      continue;
    }

    const int atom = backbone_index(atom_name);
    if (atom < 0) {
      ++st.atoms_skipped_nonbackbone;
      continue;
    }

    auto it = residue_index.find(key);
    if (it == residue_index.end()) {
      std::size_t chain_idx = cx.chains.size();
      for (std::size_t ci = 0; ci < cx.chains.size(); ++ci) {
        if (cx.chains[ci].chain_id == chain_id) chain_idx = ci;
      }
      if (chain_idx == cx.chains.size()) {
        cx.chains.push_back(ProteinChain{chain_id, {}});
      }
      Residue r;
      r.aa_type = aa;
      r.chain_id = chain_id;
      r.seq_index = seq;
      r.icode = icode;
      cx.chains[chain_idx].residues.push_back(r);
      it = residue_index
               .emplace(key, std::make_pair(
                                 chain_idx, cx.chains[chain_idx].residues.size() - 1))
               .first;
    }

    Residue& r = cx.chains[it->second.first].residues[it->second.second];
    if (r.aa_type != aa) {
      throw IngestError(std::string(source) + ":" + std::to_string(lineno) +
                        ": residue " + to_string(key) +
                        " has conflicting residue names");
    }
    if (r.atom_present[static_cast<std::size_t>(atom)]) {
      // Alternate location or duplicate record: the first occurrence wins.
      ++st.atoms_skipped_altloc;
      continue;
    }
    (void)altloc;
    r.backbone[static_cast<std::size_t>(atom)] =
        Eigen::Vector3d(parse_coord(field(line, 31, 38), source, lineno, "X"),
                        parse_coord(field(line, 39, 46), source, lineno, "Y"),
                        parse_coord(field(line, 47, 54), source, lineno, "Z"));
    r.atom_present[static_cast<std::size_t>(atom)] = true;
    ++st.atoms_kept;
  }
  return cx;
}

Complex parse_pdb(const std::filesystem::path& path, PdbStats* stats) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open PDB file: " + path.string());
  }
  Complex cx = parse_pdb(in, path.string(), stats);
  cx.pdb_id = path.stem().string();
  return cx;
}

void assign_chain_groups(Complex& cx, const std::set<char>& binder_chains,
                         const std::set<char>& target_chains) {
  if (binder_chains.empty() || target_chains.empty()) {
    throw IngestError("both chain groups must name at least one chain");
  }
  for (char c : binder_chains) {
    if (target_chains.count(c) > 0) {
      throw IngestError(std::string("chain '") + c +
                        "' appears in both chain groups");
    }
  }
  if (cx.residue_count() == 0) {
    throw IngestError("structure contains no residues");
  }
  std::set<char> present;
  for (const auto& chain : cx.chains) present.insert(chain.chain_id);
  for (const std::set<char>* group : {&binder_chains, &target_chains}) {
    for (char c : *group) {
      if (present.count(c) == 0) {
        throw IngestError(std::string("requested chain '") + c +
                          "' is not present in the structure");
      }
    }
  }
  cx.binder_chains = binder_chains;
  cx.target_chains = target_chains;
}

Complex parse_pdb(const std::string& text, const std::set<char>& binder_chains,
                  const std::set<char>& target_chains, std::string_view source,
                  PdbStats* stats) {
  std::istringstream in(text);
  Complex cx = parse_pdb(in, source, stats);
  assign_chain_groups(cx, binder_chains, target_chains);
  return cx;
}

}  // namespace ddgkit
