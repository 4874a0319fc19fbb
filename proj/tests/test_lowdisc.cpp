#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "nebo/lowdisc.hpp"
#include "support/oracles.hpp"

using namespace nebo;

TEST_CASE("generator polynomials are primitive over GF(2)") {
  // brute-force primitivity check, independent of the library's search
  const auto polys = lowdisc_detail::primitive_polynomials(40);
  REQUIRE(polys.size() == 40);
  std::set<std::uint32_t> seen;
  for (const auto p : polys) {
    CHECK(seen.insert(p).second);
    const int degree = 31 - __builtin_clz(p);
    REQUIRE(degree >= 1);
    const std::uint64_t order = (std::uint64_t{1} << degree) - 1;
    // compute the multiplicative order of x in GF(2)[x]/(p) directly
    auto mulmod = [&](std::uint64_t a, std::uint64_t b) {
      std::uint64_t r = 0;
      while (b) {
        if (b & 1) r ^= a;
        b >>= 1;
        a <<= 1;
        if (a & (std::uint64_t{1} << degree)) a ^= p;
      }
      return r;
    };
    const std::uint64_t v = degree == 1 ? mulmod(1, 2) : 2;  // x reduced mod p
    std::uint64_t cur = v;
    std::uint64_t ord = 1;
    while (cur != 1) {
      cur = mulmod(cur, v);
      ++ord;
      REQUIRE(ord <= order);
    }
    CHECK(ord == order);
  }
  // the classic low-degree primitive polynomials appear first
  CHECK(polys[0] == 0b11);    // x + 1
  CHECK(polys[1] == 0b111);   // x^2 + x + 1
  CHECK(polys[2] == 0b1011);  // x^3 + x + 1
  CHECK(polys[3] == 0b1101);  // x^3 + x^2 + 1
}

TEST_CASE("dimension 0 of the unscrambled sequence is the base-2 radical inverse") {
  auto seq = LowDiscSequence::unscrambled(1);
  for (std::uint64_t i = 0; i < 64; ++i) {
    double x;
    seq.next(&x);
    // Gray-code ordering permutes indices within each power-of-two block, so
    // compare as sets per block of 16
    (void)x;
  }
  // direct set comparison over the first 16 points
  auto seq2 = LowDiscSequence::unscrambled(1);
  std::vector<double> pts;
  for (int i = 0; i < 16; ++i) {
    double x;
    seq2.next(&x);
    pts.push_back(x);
  }
  std::vector<double> want;
  for (std::uint64_t i = 0; i < 16; ++i) want.push_back(oracle::radical_inverse(i, 2));
  std::sort(pts.begin(), pts.end());
  std::sort(want.begin(), want.end());
  for (int i = 0; i < 16; ++i) CHECK(pts[i] == doctest::Approx(want[i]).epsilon(1e-15));
}

TEST_CASE("first 2^m points project onto all dyadic intervals in every dimension") {
  const std::size_t d = 12;
  LowDiscSequence seq(d, 99);
  const auto pts = seq.take(32);
  for (std::size_t k = 0; k < d; ++k) {
    std::set<int> cells;
    for (const auto& p : pts) cells.insert(static_cast<int>(p[k] * 32.0));
    CHECK(cells.size() == 32);  // a (0,1)-sequence fills every cell exactly once
  }
}

TEST_CASE("scrambling is deterministic per seed and changes the points") {
  LowDiscSequence a(5, 7), b(5, 7), c(5, 8);
  const auto pa = a.take(20), pb = b.take(20), pc = c.take(20);
  CHECK(pa == pb);
  CHECK(pa != pc);
}

TEST_CASE("low dimensional pairs do not collapse onto each other") {
  const std::size_t d = 10;
  LowDiscSequence seq(d, 3);
  const auto pts = seq.take(64);
  for (std::size_t k1 = 0; k1 < d; ++k1)
    for (std::size_t k2 = k1 + 1; k2 < d; ++k2) {
      double max_abs_corr = 0.0, mean1 = 0.0, mean2 = 0.0;
      for (const auto& p : pts) {
        mean1 += p[k1];
        mean2 += p[k2];
      }
      mean1 /= pts.size();
      mean2 /= pts.size();
      double num = 0.0, den1 = 0.0, den2 = 0.0;
      for (const auto& p : pts) {
        num += (p[k1] - mean1) * (p[k2] - mean2);
        den1 += (p[k1] - mean1) * (p[k1] - mean1);
        den2 += (p[k2] - mean2) * (p[k2] - mean2);
      }
      max_abs_corr = std::abs(num / std::sqrt(den1 * den2));
      CHECK(max_abs_corr < 0.6);
    }
}
