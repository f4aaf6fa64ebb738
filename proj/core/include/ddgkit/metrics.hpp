#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ddgkit {

// Average ranks, 1-based; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v);

// Correlations return nullopt when undefined (fewer than two points or
// zero variance in either argument); callers decide how to report that.
std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y);
std::optional<double> spearman(std::span<const double> x,
                               std::span<const double> y);

double rmse(std::span<const double> pred, std::span<const double> truth);
double mae(std::span<const double> pred, std::span<const double> truth);

// Probability that a random positive-class prediction outranks a random
// negative-class one, ties counted half. Classes come from the sign of
// the ground truth (> 0 is positive). nullopt when one class is absent.
std::optional<double> auroc(std::span<const double> pred,
                            std::span<const double> truth);

struct PerStructureResult {
  std::optional<double> mean_pearson;
  std::optional<double> mean_spearman;
  int n_scored = 0;
  int n_excluded = 0;  // groups with < 2 records or zero variance
};

// Groups records by split key and averages within-group correlations
// over the qualifying groups.
PerStructureResult per_structure_metrics(
    const std::vector<std::string>& split_keys, std::span<const double> pred,
    std::span<const double> truth);

struct MetricReport {
  std::optional<double> pearson;
  std::optional<double> spearman;
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> auroc;
  std::optional<double> per_structure_pearson;
  std::optional<double> per_structure_spearman;
  int n_records = 0;
  int n_structures_scored = 0;
  int n_structures_excluded = 0;
};

MetricReport compute_metrics(const std::vector<std::string>& split_keys,
                             std::span<const double> pred,
                             std::span<const double> truth);

// JSON object with nulls for undefined metrics.
std::string to_json(const MetricReport& report);

}  // namespace ddgkit
