#pragma once

#include <span>
#include <stdexcept>

namespace nebo {

struct DegenerateInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct WilcoxonResult {
  double statistic = 0.0;  // W+, the positive rank sum
  double p_value = 1.0;    // two-sided
  std::size_t n_used = 0;  // pairs remaining after dropping zero differences
};

// Paired Wilcoxon signed-rank test with average ranks for ties. Uses the
// exact signed-rank distribution for n <= 25 and the normal approximation
// with continuity and tie corrections above. Pairs with zero difference are
// dropped; at least five non-zero differences are required.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

}  // namespace nebo
