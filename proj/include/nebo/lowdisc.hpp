#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace nebo {

// Base-2 digital low-discrepancy sequence (Sobol construction).
//
// Dimension 0 is plain van der Corput base 2 (identity generator matrix);
// higher dimensions use generator matrices built from primitive polynomials
// over GF(2), found by exhaustive search at first use rather than transcribed
// from published tables. Initial direction numbers are drawn from a fixed
// internal stream, and a per-seed digital XOR shift scrambles the sequence
// without disturbing its equidistribution: the first 2^m points still project
// onto all 2^m dyadic intervals in every dimension.
class LowDiscSequence {
 public:
  LowDiscSequence(std::size_t dimension, std::uint64_t seed);
  static LowDiscSequence unscrambled(std::size_t dimension);

  std::size_t dimension() const { return dim_; }

  // Writes the next point (dimension() doubles in [0,1)) and advances.
  void next(double* out);

  std::vector<std::vector<double>> take(std::size_t n);

  static constexpr std::size_t kMaxDimension = 64;

 private:
  std::size_t dim_ = 0;
  std::uint64_t index_ = 0;
  std::vector<std::uint64_t> state_;      // Gray-code accumulator per dimension
  std::vector<std::uint64_t> scramble_;   // digital shift per dimension
  std::vector<std::uint64_t> direction_;  // dim_ * kBits direction integers
};

namespace lowdisc_detail {
// Primitive polynomials over GF(2) in ascending (degree, encoding) order,
// encoded with bit i = coefficient of x^i. Exposed for verification tests.
std::vector<std::uint32_t> primitive_polynomials(std::size_t count);
}  // namespace lowdisc_detail

}  // namespace nebo
