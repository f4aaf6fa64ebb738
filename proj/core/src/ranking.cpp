#include "ddgkit/ranking.hpp"

#include "ddgkit/error.hpp"
#include "ddgkit/metrics.hpp"

namespace ddgkit {

std::vector<RankedMutation> rank_mutations(std::span<const double> preds) {
  if (preds.empty()) {
    throw NumericError("rank_mutations: no predictions");
  }
  const std::vector<double> ranks = average_ranks(preds);
  std::vector<RankedMutation> out(preds.size());
  const auto total = static_cast<double>(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out[i].index = i;
    out[i].pred = preds[i];
    out[i].rank = ranks[i];
    out[i].rank_percent = ranks[i] / total * 100.0;
  }
  return out;
}

}  // namespace ddgkit
