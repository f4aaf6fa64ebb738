#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddgkit/types.hpp"

namespace ddgkit {

struct SkempiTable {
  std::vector<SkempiRecord> records;
  int dropped_missing_ddg = 0;
};

// Reads the mutation record table. Expected header:
//   pdb_id, binder_chains, target_chains, mutations, ddg
// Mutation codes within a row are semicolon-separated. Rows without a
// ddg value are dropped (counted in dropped_missing_ddg); any other
// malformed field is an error naming the row number.
SkempiTable parse_skempi_table(std::istream& in, const std::string& source);
SkempiTable parse_skempi_table(const std::filesystem::path& path);

}  // namespace ddgkit
