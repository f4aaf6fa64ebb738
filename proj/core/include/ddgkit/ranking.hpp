#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ddgkit {

struct RankedMutation {
  std::size_t index = 0;  // position in the input prediction list
  double pred = 0.0;
  double rank = 0.0;          // 1 = most stabilizing (lowest prediction)
  double rank_percent = 0.0;  // rank / total * 100
};

// Ranks candidates by predicted value ascending, tied values sharing
// the average rank. Output preserves input order.
std::vector<RankedMutation> rank_mutations(std::span<const double> preds);

}  // namespace ddgkit
