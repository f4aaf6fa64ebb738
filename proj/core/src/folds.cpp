#include "ddgkit/folds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ddgkit/error.hpp"
#include "ddgkit/rng.hpp"

namespace ddgkit {

int FoldPlan::fold_of(const std::string& key) const {
  for (int f = 0; f < n_folds; ++f) {
    const auto& keys = test_keys[static_cast<std::size_t>(f)];
    if (std::find(keys.begin(), keys.end(), key) != keys.end()) return f;
  }
  return -1;
}

std::string FoldPlan::role_in_fold(const std::string& key, int fold) const {
  if (fold < 0 || fold >= n_folds) {
    throw NumericError("role_in_fold: fold index out of range");
  }
  const auto f = static_cast<std::size_t>(fold);
  const auto& test = test_keys[f];
  if (std::find(test.begin(), test.end(), key) != test.end()) return "test";
  const auto& val = val_keys[f];
  if (std::find(val.begin(), val.end(), key) != val.end()) return "val";
  if (fold_of(key) < 0) {
    throw NumericError("role_in_fold: unknown split key '" + key + "'");
  }
  return "train";
}

std::vector<std::string> FoldPlan::all_keys() const {
  std::vector<std::string> keys;
  for (const auto& fold : test_keys) {
    keys.insert(keys.end(), fold.begin(), fold.end());
  }
  return keys;
}

FoldPlan make_folds(const std::vector<SkempiRecord>& records, int n_folds,
                    double val_frac, std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("make_folds: need at least 2 folds");

  std::vector<std::string> keys;  // first-appearance order
  std::set<std::string> seen;
  for (const auto& rec : records) {
    if (seen.insert(rec.split_key).second) keys.push_back(rec.split_key);
  }
  if (keys.size() < static_cast<std::size_t>(n_folds)) {
    throw ConfigError("make_folds: " + std::to_string(keys.size()) +
                      " distinct complexes for " + std::to_string(n_folds) +
                      " folds");
  }

  Rng rng(seed);
  rng.shuffle(keys);

  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.test_keys.resize(static_cast<std::size_t>(n_folds));
  plan.val_keys.resize(static_cast<std::size_t>(n_folds));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    plan.test_keys[i % static_cast<std::size_t>(n_folds)].push_back(keys[i]);
  }

  for (int f = 0; f < n_folds; ++f) {
    // Training keys in shuffled order, i.e. everything outside fold f.
    std::vector<std::string> train;
    const auto& test = plan.test_keys[static_cast<std::size_t>(f)];
    for (const auto& key : keys) {
      if (std::find(test.begin(), test.end(), key) == test.end()) {
        train.push_back(key);
      }
    }
    const auto n_val = static_cast<std::size_t>(std::max(
        1.0, std::ceil(val_frac * static_cast<double>(train.size()))));
    for (std::size_t i = 0; i < n_val && i < train.size(); ++i) {
      plan.val_keys[static_cast<std::size_t>(f)].push_back(train[i]);
    }
  }
  return plan;
}

void write_fold_plan_csv(const std::filesystem::path& path,
                         const FoldPlan& plan) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write fold plan: " + path.string());
  out << "split_key,fold,role\n";
  const std::vector<std::string> keys = plan.all_keys();
  for (int f = 0; f < plan.n_folds; ++f) {
    for (const auto& key : keys) {
      out << key << ',' << f << ',' << plan.role_in_fold(key, f) << '\n';
    }
  }
  if (!out) throw IoError("failed writing fold plan: " + path.string());
}

FoldPlan read_fold_plan_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open fold plan: " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw IngestError(path.string() + ": empty fold plan");
  }
  FoldPlan plan;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string key, fold_str, role;
    if (!std::getline(ss, key, ',') || !std::getline(ss, fold_str, ',') ||
        !std::getline(ss, role)) {
      throw IngestError(path.string() + ":" + std::to_string(row) +
                        ": malformed fold plan row");
    }
    int fold = 0;
    try {
      fold = std::stoi(fold_str);
    } catch (const std::exception&) {
      throw IngestError(path.string() + ":" + std::to_string(row) +
                        ": bad fold index '" + fold_str + "'");
    }
    if (fold < 0) {
      throw IngestError(path.string() + ":" + std::to_string(row) +
                        ": negative fold index");
    }
    if (fold + 1 > plan.n_folds) {
      plan.n_folds = fold + 1;
      plan.test_keys.resize(static_cast<std::size_t>(plan.n_folds));
      plan.val_keys.resize(static_cast<std::size_t>(plan.n_folds));
    }
    if (role == "test") {
      plan.test_keys[static_cast<std::size_t>(fold)].push_back(key);
    } else if (role == "val") {
      plan.val_keys[static_cast<std::size_t>(fold)].push_back(key);
    } else if (role != "train") {
      throw IngestError(path.string() + ":" + std::to_string(row) +
                        ": unknown role '" + role + "'");
    }
  }
  return plan;
}

}  // namespace ddgkit
