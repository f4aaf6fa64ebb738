#include "ddgkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "ddgkit/error.hpp"

namespace ddgkit {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y,
                std::size_t min_len, const char* what) {
  if (x.size() != y.size()) {
    throw NumericError(std::string(what) + ": length mismatch");
  }
  if (x.size() < min_len) {
    throw NumericError(std::string(what) + ": need at least " +
                       std::to_string(min_len) + " points");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw NumericError(std::string(what) + ": non-finite input");
    }
  }
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    // Positions i..j (0-based) share the mean 1-based rank.
    const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y) {
  check_pair(x, y, 2, "pearson");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::optional<double> spearman(std::span<const double> x,
                               std::span<const double> y) {
  check_pair(x, y, 2, "spearman");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  return pearson(rx, ry);
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, 1, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  }
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, 1, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    s += std::abs(pred[i] - truth[i]);
  }
  return s / static_cast<double>(pred.size());
}

std::optional<double> auroc(std::span<const double> pred,
                            std::span<const double> truth) {
  check_pair(pred, truth, 1, "auroc");
  std::size_t n_pos = 0;
  for (double t : truth) n_pos += t > 0.0 ? 1 : 0;
  const std::size_t n_neg = truth.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  // Rank-sum form of the Mann-Whitney statistic; average ranks give the
  // half credit for tied predictions.
  const std::vector<double> ranks = average_ranks(pred);
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] > 0.0) pos_rank_sum += ranks[i];
  }
  const double u = pos_rank_sum -
                   static_cast<double>(n_pos) *
                       (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

PerStructureResult per_structure_metrics(
    const std::vector<std::string>& split_keys, std::span<const double> pred,
    std::span<const double> truth) {
  if (split_keys.size() != pred.size() || pred.size() != truth.size()) {
    throw NumericError("per_structure_metrics: length mismatch");
  }
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < split_keys.size(); ++i) {
    groups[split_keys[i]].push_back(i);
  }

  PerStructureResult result;
  double sum_p = 0.0, sum_s = 0.0;
  for (const auto& [key, idx] : groups) {
    if (idx.size() < 2) {
      ++result.n_excluded;
      continue;
    }
    std::vector<double> gp, gt;
    for (std::size_t i : idx) {
      gp.push_back(pred[i]);
      gt.push_back(truth[i]);
    }
    const auto p = pearson(gp, gt);
    const auto s = spearman(gp, gt);
    if (!p.has_value() || !s.has_value()) {
      ++result.n_excluded;
      continue;
    }
    sum_p += *p;
    sum_s += *s;
    ++result.n_scored;
  }
  if (result.n_scored > 0) {
    result.mean_pearson = sum_p / result.n_scored;
    result.mean_spearman = sum_s / result.n_scored;
  }
  return result;
}

MetricReport compute_metrics(const std::vector<std::string>& split_keys,
                             std::span<const double> pred,
                             std::span<const double> truth) {
  MetricReport report;
  report.n_records = static_cast<int>(pred.size());
  report.rmse = rmse(pred, truth);
  report.mae = mae(pred, truth);
  if (pred.size() >= 2) {
    report.pearson = pearson(pred, truth);
    report.spearman = spearman(pred, truth);
  }
  report.auroc = auroc(pred, truth);
  const PerStructureResult per = per_structure_metrics(split_keys, pred, truth);
  report.per_structure_pearson = per.mean_pearson;
  report.per_structure_spearman = per.mean_spearman;
  report.n_structures_scored = per.n_scored;
  report.n_structures_excluded = per.n_excluded;
  return report;
}

std::string to_json(const MetricReport& report) {
  nlohmann::json j;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v.has_value()) {
      j[key] = *v;
    } else {
      j[key] = nullptr;
    }
  };
  put("pearson", report.pearson);
  put("spearman", report.spearman);
  j["rmse"] = report.rmse;
  j["mae"] = report.mae;
  put("auroc", report.auroc);
  put("per_structure_pearson", report.per_structure_pearson);
  put("per_structure_spearman", report.per_structure_spearman);
  j["n_records"] = report.n_records;
  j["n_structures_scored"] = report.n_structures_scored;
  j["n_structures_excluded"] = report.n_structures_excluded;
  return j.dump(2) + "\n";
}

}  // namespace ddgkit
