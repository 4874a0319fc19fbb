#include "nebo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace nebo {
namespace {

// average ranks of |d|, doubled so that ties produce integers
std::vector<std::int64_t> doubled_ranks(const std::vector<double>& abs_d) {
  const std::size_t n = abs_d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return abs_d[x] < abs_d[y]; });
  std::vector<std::int64_t> r2(n, 0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && abs_d[order[j + 1]] == abs_d[order[i]]) ++j;
    // ranks i+1..j+1 averaged; doubled sum = (i+1 + j+1)
    const std::int64_t avg2 = static_cast<std::int64_t>(i + 1 + j + 1);
    for (std::size_t t = i; t <= j; ++t) r2[order[t]] = avg2;
    i = j + 1;
  }
  return r2;
}

double exact_two_sided_p(const std::vector<std::int64_t>& r2, std::int64_t w2) {
  // distribution of the doubled positive rank sum over all 2^n sign vectors
  const std::int64_t total = std::accumulate(r2.begin(), r2.end(), std::int64_t{0});
  std::vector<double> count(total + 1, 0.0);
  count[0] = 1.0;
  for (const std::int64_t r : r2) {
    for (std::int64_t s = total; s >= r; --s) count[s] += count[s - r];
  }
  const double all = std::ldexp(1.0, static_cast<int>(r2.size()));
  // two-sided tail mass: |W - mu| >= |w - mu| under the symmetric null
  const double mu2 = static_cast<double>(total) / 2.0;
  const double dev = std::abs(static_cast<double>(w2) - mu2);
  double tail = 0.0;
  for (std::int64_t s = 0; s <= total; ++s) {
    if (std::abs(static_cast<double>(s) - mu2) >= dev - 1e-9) tail += count[s];
  }
  return std::min(tail / all, 1.0);
}

double normal_approx_two_sided_p(const std::vector<std::int64_t>& r2, std::int64_t w2) {
  const std::size_t n = r2.size();
  const double nn = static_cast<double>(n);
  const double w = static_cast<double>(w2) / 2.0;
  const double mu = nn * (nn + 1.0) / 4.0;
  double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
  // tie correction: subtract sum(t^3 - t)/48 per tie group
  std::vector<std::int64_t> sorted(r2);
  std::sort(sorted.begin(), sorted.end());
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    var -= (t * t * t - t) / 48.0;
    i = j + 1;
  }
  if (var <= 0.0) throw DegenerateInputError("wilcoxon: zero variance rank distribution");
  double z = w - mu;
  z -= (z > 0 ? 0.5 : (z < 0 ? -0.5 : 0.0));  // continuity correction
  z /= std::sqrt(var);
  const double p = std::erfc(std::abs(z) / std::sqrt(2.0));
  return std::min(p, 1.0);
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("wilcoxon: samples must have equal length");
  std::vector<double> diff, abs_d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d == 0.0) continue;
    diff.push_back(d);
    abs_d.push_back(std::abs(d));
  }
  if (diff.empty()) throw DegenerateInputError("wilcoxon: all differences are zero");
  if (diff.size() < 5)
    throw std::invalid_argument("wilcoxon: needs >= 5 non-zero differences");

  const auto r2 = doubled_ranks(abs_d);
  std::int64_t w2 = 0;
  for (std::size_t i = 0; i < diff.size(); ++i)
    if (diff[i] > 0.0) w2 += r2[i];

  WilcoxonResult res;
  res.n_used = diff.size();
  res.statistic = static_cast<double>(w2) / 2.0;
  res.p_value = diff.size() <= 25 ? exact_two_sided_p(r2, w2)
                                  : normal_approx_two_sided_p(r2, w2);
  return res;
}

}  // namespace nebo
