#include "ddgkit/skempi.hpp"

#include <cmath>
#include <fstream>
#include <istream>

#include "ddgkit/error.hpp"
#include "ddgkit/mutation.hpp"

namespace ddgkit {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

[[noreturn]] void row_error(const std::string& source, std::size_t row,
                            const std::string& what) {
  throw IngestError(source + ":" + std::to_string(row) + ": " + what);
}

std::set<char> parse_chain_group(const std::string& raw,
                                 const std::string& source, std::size_t row,
                                 const char* which) {
  std::set<char> group;
  for (char c : raw) {
    if (c == ' ' || c == '\t') continue;
    if (c < 'A' || c > 'Z') {
      row_error(source, row,
                std::string(which) + " chain group has bad chain id '" + c +
                    "'");
    }
    group.insert(c);
  }
  if (group.empty()) {
    row_error(source, row, std::string(which) + " chain group is empty");
  }
  return group;
}

}  // namespace

SkempiTable parse_skempi_table(std::istream& in, const std::string& source) {
  SkempiTable table;
  std::string line;
  std::size_t row = 0;

  if (!std::getline(in, line)) {
    throw IngestError(source + ": empty record table");
  }
  ++row;
  {
    auto header = split(line, ',');
    const std::vector<std::string> expected = {
        "pdb_id", "binder_chains", "target_chains", "mutations", "ddg"};
    bool ok = header.size() == expected.size();
    for (std::size_t i = 0; ok && i < expected.size(); ++i) {
      ok = trim(header[i]) == expected[i];
    }
    if (!ok) {
      row_error(source, row,
                "unexpected header; want pdb_id, binder_chains, "
                "target_chains, mutations, ddg");
    }
  }

  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != 5) {
      row_error(source, row,
                "expected 5 fields, got " + std::to_string(fields.size()));
    }
    for (auto& f : fields) f = trim(f);

    SkempiRecord rec;
    rec.pdb_id = fields[0];
    if (rec.pdb_id.empty()) row_error(source, row, "empty pdb_id");
    rec.binder_chains = parse_chain_group(fields[1], source, row, "binder");
    rec.target_chains = parse_chain_group(fields[2], source, row, "target");
    for (char c : rec.binder_chains) {
      if (rec.target_chains.count(c) > 0) {
        row_error(source, row,
                  std::string("chain '") + c + "' is in both groups");
      }
    }

    if (fields[3].empty()) row_error(source, row, "empty mutation list");
    for (const std::string& code : split(fields[3], ';')) {
      const std::string c = trim(code);
      if (c.empty()) row_error(source, row, "empty mutation code");
      Mutation m;
      try {
        m = parse_mutation(c);
      } catch (const IngestError& e) {
        row_error(source, row, e.what());
      }
      rec.mutations.push_back(m);
      for (std::size_t i = 0; i + 1 < rec.mutations.size(); ++i) {
        if (rec.mutations[i].key() == m.key()) {
          row_error(source, row,
                    "duplicate mutation site " + to_string(m.key()));
        }
      }
    }

    if (fields[4].empty()) {
      ++table.dropped_missing_ddg;
      continue;
    }
    try {
      std::size_t used = 0;
      rec.ddg_label = std::stod(fields[4], &used);
      if (used != fields[4].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      row_error(source, row, "bad ddg value '" + fields[4] + "'");
    }
    if (!std::isfinite(rec.ddg_label)) {
      row_error(source, row, "ddg must be finite");
    }

    rec.split_key = rec.pdb_id;
    table.records.push_back(std::move(rec));
  }
  return table;
}

SkempiTable parse_skempi_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open record table: " + path.string());
  return parse_skempi_table(in, path.string());
}

}  // namespace ddgkit
