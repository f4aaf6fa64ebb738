#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ddgkit/types.hpp"

namespace ddgkit {

// Complex-disjoint cross-validation plan: every split key lands in
// exactly one test fold; each fold's training keys donate a small
// validation subset (whole complexes, never single records).
struct FoldPlan {
  int n_folds = 0;
  std::vector<std::vector<std::string>> test_keys;  // per fold
  std::vector<std::vector<std::string>> val_keys;   // subset of that fold's training keys

  // Test-fold index of a key; -1 if the key is not in the plan.
  int fold_of(const std::string& key) const;
  // Role of a key from fold `fold`'s perspective: "test", "val", "train".
  std::string role_in_fold(const std::string& key, int fold) const;
  std::vector<std::string> all_keys() const;
};

// Unique split keys (first-appearance order) are shuffled with the seed
// and dealt round-robin. Validation: the first ceil(val_frac * n_train)
// (at least 1) of each fold's training keys, in shuffled order.
FoldPlan make_folds(const std::vector<SkempiRecord>& records, int n_folds = 3,
                    double val_frac = 0.1, std::uint64_t seed = 0);

// CSV rows (split_key, fold, role): each key's role from the
// perspective of every fold.
void write_fold_plan_csv(const std::filesystem::path& path,
                         const FoldPlan& plan);
FoldPlan read_fold_plan_csv(const std::filesystem::path& path);

}  // namespace ddgkit
