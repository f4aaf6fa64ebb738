#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <tuple>

#include <Eigen/Dense>

#include "ddgkit/seqmodel.hpp"

namespace ddgkit {

// Log-probabilities loaded from a CSV table. Each (complex, state, site) key
// must carry a full 20-way distribution; entries are independent of decoding
// order, so chain-rule joints over this provider factorize per site.
class FileLogProbProvider final : public LogProbProvider {
 public:
  using Key = std::tuple<std::string, StructState, ResidueKey>;

  static FileLogProbProvider from_csv(std::istream& in,
                                      const std::string& source);
  static FileLogProbProvider from_csv(const std::filesystem::path& path);

  Eigen::VectorXd site_log_probs(
      const Complex& ctx, StructState state, const ResidueKey& site,
      const std::vector<SiteAssignment>& decoded,
      const std::vector<ResidueKey>& undecoded) const override;

  std::size_t entry_count() const { return table_.size(); }

 private:
  std::map<Key, Eigen::VectorXd> table_;
};

}  // namespace ddgkit
