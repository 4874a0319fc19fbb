#include "nebo/lowdisc.hpp"

#include <bit>
#include <cassert>
#include <stdexcept>

#include "nebo/rng.hpp"

namespace nebo {
namespace {

constexpr std::size_t kBits = 52;
constexpr std::uint64_t kMask = (std::uint64_t{1} << kBits) - 1;
// fixed internal stream for direction-number initialization; not a user seed
constexpr std::uint64_t kDirectionStream = 0x5eb0a9d3c1f2e47bULL;

std::uint32_t polmul_mod(std::uint32_t a, std::uint32_t b, std::uint32_t mod, int degree) {
  std::uint32_t r = 0;
  while (b) {
    if (b & 1u) r ^= a;
    b >>= 1;
    a <<= 1;
    if (a & (1u << degree)) a ^= mod;
  }
  return r;
}

std::uint32_t polpow_mod(std::uint32_t base, std::uint64_t e, std::uint32_t mod, int degree) {
  for (int bit = 31; bit >= degree; --bit)
    if (base & (1u << bit)) base ^= mod << (bit - degree);
  std::uint32_t r = 1;
  while (e) {
    if (e & 1u) r = polmul_mod(r, base, mod, degree);
    base = polmul_mod(base, base, mod, degree);
    e >>= 1;
  }
  return r;
}

// x has order 2^degree - 1 in GF(2)[x]/(poly) iff poly is primitive
bool is_primitive(std::uint32_t poly, int degree) {
  if ((poly & 1u) == 0) return false;  // constant term required
  const std::uint64_t order = (std::uint64_t{1} << degree) - 1;
  if (polpow_mod(2u, order, poly, degree) != 1u) return false;
  std::uint64_t n = order;
  for (std::uint64_t q = 2; q * q <= n; ++q) {
    if (n % q) continue;
    if (polpow_mod(2u, order / q, poly, degree) == 1u) return false;
    while (n % q == 0) n /= q;
  }
  if (n > 1 && n < order && polpow_mod(2u, order / n, poly, degree) == 1u) return false;
  return true;
}

}  // namespace

namespace lowdisc_detail {

std::vector<std::uint32_t> primitive_polynomials(std::size_t count) {
  std::vector<std::uint32_t> polys;
  for (int degree = 1; polys.size() < count && degree < 16; ++degree) {
    const std::uint32_t lo = 1u << degree;
    for (std::uint32_t p = lo + 1; p < 2 * lo && polys.size() < count; p += 2) {
      if (is_primitive(p, degree)) polys.push_back(p);
    }
  }
  return polys;
}

}  // namespace lowdisc_detail

LowDiscSequence::LowDiscSequence(std::size_t dimension, std::uint64_t seed)
    : dim_(dimension), state_(dimension, 0), scramble_(dimension, 0),
      direction_(dimension * kBits, 0) {
  if (dimension == 0 || dimension > kMaxDimension)
    throw std::invalid_argument("low-discrepancy dimension out of range");

  // dimension 0: identity generator matrix (van der Corput base 2)
  for (std::size_t k = 0; k < kBits; ++k)
    direction_[k] = std::uint64_t{1} << (kBits - 1 - k);

  const auto polys =
      dim_ > 1 ? lowdisc_detail::primitive_polynomials(dim_ - 1) : std::vector<std::uint32_t>{};
  for (std::size_t j = 1; j < dim_; ++j) {
    const std::uint32_t poly = polys[j - 1];
    const int s = 31 - std::countl_zero(poly);
    std::uint64_t* v = direction_.data() + j * kBits;
    Rng init(derive_seed(kDirectionStream, j));
    // initial direction integers m_k: odd, below 2^k
    std::vector<std::uint64_t> m(kBits + 1, 0);
    for (int k = 1; k <= s && k <= static_cast<int>(kBits); ++k) {
      const std::uint64_t span = std::uint64_t{1} << (k - 1);
      m[k] = 2 * (init.next() % span) + 1;
    }
    for (std::size_t k = s + 1; k <= kBits; ++k) {
      std::uint64_t mk = m[k - s] ^ (m[k - s] << s);
      for (int i = 1; i < s; ++i) {
        if ((poly >> (s - i)) & 1u) mk ^= m[k - i] << i;
      }
      m[k] = mk;
    }
    for (std::size_t k = 1; k <= kBits; ++k) v[k - 1] = m[k] << (kBits - k);
  }

  if (seed != 0) {
    Rng scr(derive_seed(seed, 0x10d15cULL));
    for (std::size_t j = 0; j < dim_; ++j) scramble_[j] = scr.next() & kMask;
  }
}

LowDiscSequence LowDiscSequence::unscrambled(std::size_t dimension) {
  return LowDiscSequence(dimension, 0);
}

void LowDiscSequence::next(double* out) {
  constexpr double kScale = 1.0 / static_cast<double>(std::uint64_t{1} << kBits);
  for (std::size_t j = 0; j < dim_; ++j)
    out[j] = static_cast<double>((state_[j] ^ scramble_[j]) & kMask) * kScale;
  // Gray-code advance
  const std::size_t k = static_cast<std::size_t>(std::countr_zero(~index_));
  for (std::size_t j = 0; j < dim_; ++j) state_[j] ^= direction_[j * kBits + k];
  ++index_;
}

std::vector<std::vector<double>> LowDiscSequence::take(std::size_t n) {
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim_));
  for (auto& p : pts) next(p.data());
  return pts;
}

}  // namespace nebo
