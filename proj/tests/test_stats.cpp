#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "nebo/rng.hpp"
#include "nebo/stats.hpp"
#include "support/oracles.hpp"

using namespace nebo;

TEST_CASE("degenerate and malformed inputs") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  CHECK_THROWS_AS((void)wilcoxon_signed_rank(a, a), DegenerateInputError);
  const std::vector<double> b{1, 2, 3};
  CHECK_THROWS(wilcoxon_signed_rank(a, b));
  // fewer than 5 non-zero differences
  const std::vector<double> c{1, 2, 3, 4, 5};
  const std::vector<double> d{2, 3, 4, 4, 5};
  CHECK_THROWS(wilcoxon_signed_rank(c, d));
}

TEST_CASE("all-positive n=5 case") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{0, 0, 0, 0, 0};
  const auto res = wilcoxon_signed_rank(a, b);
  CHECK(res.n_used == 5);
  CHECK(res.statistic == 15.0);
  CHECK(res.p_value == doctest::Approx(0.0625).epsilon(1e-12));
}

TEST_CASE("two-sided symmetry under swapping the samples") {
  Rng rng(1);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> a(8), b(8);
    for (int i = 0; i < 8; ++i) {
      a[i] = rng.uniform(-1, 1);
      b[i] = rng.uniform(-1, 1);
    }
    const auto p1 = wilcoxon_signed_rank(a, b).p_value;
    const auto p2 = wilcoxon_signed_rank(b, a).p_value;
    CHECK(p1 == doctest::Approx(p2).epsilon(1e-12));
  }
}

TEST_CASE("exact p-values match full enumeration for n <= 10") {
  Rng rng(2);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 5 + t % 6;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(-2, 2);
      // force ties in |difference| now and then
      b[i] = (t % 3 == 0 && i % 2 == 0) ? a[i] - 0.5 : rng.uniform(-2, 2);
    }
    bool degenerate = true;
    for (std::size_t i = 0; i < n; ++i) degenerate = degenerate && a[i] == b[i];
    if (degenerate) continue;
    const auto got = wilcoxon_signed_rank(a, b);
    const auto want = oracle::wilcoxon_enumerated_p(a, b);
    CAPTURE(t);
    CHECK(got.p_value == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("normal approximation is sane for large n") {
  Rng rng(3);
  const std::size_t n = 60;
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.normal();
    b[i] = a[i] + 0.05 * rng.normal();  // nearly paired: p should be large-ish
  }
  const auto res = wilcoxon_signed_rank(a, b);
  CHECK(res.p_value > 0.0);
  CHECK(res.p_value <= 1.0);

  // strong one-sided shift: tiny p
  for (std::size_t i = 0; i < n; ++i) b[i] = a[i] - 1.0;
  CHECK(wilcoxon_signed_rank(a, b).p_value < 1e-8);
}

TEST_CASE("exact distribution respects a known textbook value") {
  // n = 6, all positive: W+ = 21, two-sided p = 2/64
  const std::vector<double> a{1, 2, 3, 4, 5, 6};
  const std::vector<double> b(6, 0.0);
  const auto res = wilcoxon_signed_rank(a, b);
  CHECK(res.p_value == doctest::Approx(2.0 / 64.0).epsilon(1e-12));
}
