#include "ddgkit/logprob_file.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "ddgkit/aa.hpp"
#include "ddgkit/error.hpp"

namespace ddgkit {

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void row_error(const std::string& source, std::size_t row,
                            const std::string& what) {
  throw IngestError(source + ":" + std::to_string(row) + ": " + what);
}

}  // namespace

FileLogProbProvider FileLogProbProvider::from_csv(std::istream& in,
                                                  const std::string& source) {
  FileLogProbProvider provider;
  std::string line;
  std::size_t row = 0;

  if (!std::getline(in, line)) {
    throw IngestError(source + ": empty log-probability table");
  }
  ++row;
  {
    auto header = split_csv_row(line);
    const std::vector<std::string> expected = {
        "complex_id", "state", "chain", "position", "insertion_code",
        "aa",         "logp"};
    bool ok = header.size() == expected.size();
    for (std::size_t i = 0; ok && i < expected.size(); ++i) {
      ok = trim(header[i]) == expected[i];
    }
    if (!ok) row_error(source, row, "unexpected header");
  }

  // Per-key bookkeeping so we can demand exactly one logp per amino acid.
  std::map<Key, std::array<bool, kNumAminoAcids>> seen;

  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split_csv_row(line);
    if (fields.size() != 7) {
      row_error(source, row, "expected 7 fields, got " +
                                 std::to_string(fields.size()));
    }
    for (auto& f : fields) f = trim(f);

    const std::string& complex_id = fields[0];
    if (complex_id.empty()) row_error(source, row, "empty complex_id");

    StructState state;
    if (fields[1] == "bound") {
      state = StructState::Bound;
    } else if (fields[1] == "unbound") {
      state = StructState::Unbound;
    } else {
      row_error(source, row, "state must be 'bound' or 'unbound', got '" +
                                 fields[1] + "'");
    }

    if (fields[2].size() != 1) {
      row_error(source, row, "chain must be a single character");
    }
    ResidueKey site;
    site.chain_id = fields[2][0];
    try {
      site.seq_index = std::stoi(fields[3]);
    } catch (const std::exception&) {
      row_error(source, row, "bad position '" + fields[3] + "'");
    }
    if (fields[4].size() > 1) {
      row_error(source, row, "insertion_code must be empty or one character");
    }
    site.icode = fields[4].empty() ? ' ' : fields[4][0];

    if (fields[5].size() != 1) {
      row_error(source, row, "aa must be a one-letter code");
    }
    int aa;
    try {
      aa = aa_from_letter(fields[5][0]);
    } catch (const IngestError& e) {
      row_error(source, row, e.what());
    }

    double logp;
    try {
      std::size_t used = 0;
      logp = std::stod(fields[6], &used);
      if (used != fields[6].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      row_error(source, row, "bad logp '" + fields[6] + "'");
    }
    if (!std::isfinite(logp)) row_error(source, row, "logp must be finite");

    Key key{complex_id, state, site};
    auto [it, inserted] = seen.emplace(key, std::array<bool, kNumAminoAcids>{});
    auto& mask = it->second;
    if (inserted) {
      provider.table_.emplace(key, Eigen::VectorXd::Zero(kNumAminoAcids));
    }
    if (mask[static_cast<std::size_t>(aa - 1)]) {
      row_error(source, row,
                "duplicate entry for " + complex_id + "/" + fields[1] + "/" +
                    to_string(site) + "/" + fields[5]);
    }
    mask[static_cast<std::size_t>(aa - 1)] = true;
    provider.table_.at(key)[aa - 1] = logp;
  }

  for (const auto& [key, mask] : seen) {
    int count = 0;
    for (bool b : mask) count += b ? 1 : 0;
    const auto& [complex_id, state, site] = key;
    const std::string tag = complex_id + "/" +
                            (state == StructState::Bound ? "bound" : "unbound") +
                            "/" + to_string(site);
    if (count != kNumAminoAcids) {
      throw IngestError(source + ": " + tag + " has " + std::to_string(count) +
                        " of " + std::to_string(kNumAminoAcids) +
                        " amino acid entries");
    }
    const double mass = provider.table_.at(key).array().exp().sum();
    if (std::abs(mass - 1.0) > 1e-6) {
      std::ostringstream oss;
      oss << source << ": " << tag << " probabilities sum to "
          << std::setprecision(12) << mass << ", expected 1 within 1e-6";
      throw IngestError(oss.str());
    }
  }
  return provider;
}

FileLogProbProvider FileLogProbProvider::from_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return from_csv(in, path.string());
}

Eigen::VectorXd FileLogProbProvider::site_log_probs(
    const Complex& ctx, StructState state, const ResidueKey& site,
    const std::vector<SiteAssignment>& /*decoded*/,
    const std::vector<ResidueKey>& /*undecoded*/) const {
  Key key{ctx.pdb_id, state, site};
  auto it = table_.find(key);
  if (it == table_.end()) {
    throw IngestError("no log-probability entry for " + ctx.pdb_id + "/" +
                      (state == StructState::Bound ? "bound" : "unbound") +
                      "/" + to_string(site));
  }
  return it->second;
}

}  // namespace ddgkit
