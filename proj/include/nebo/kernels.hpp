#pragma once

#include <cstddef>

namespace nebo::kern {

// Batch kernels for the numeric hot paths: covariance assembly, triangular
// solves with many right-hand sides, and the acquisition inner loops.
//
// Every kernel has a scalar reference implementation; SIMD lanes are selected
// at runtime and are equivalence-tested against the scalar lane. Lanes may
// differ from the reference in the last ulps (FMA contraction, polynomial
// exp), never beyond the tolerances asserted in the kernel tests.
struct Ops {
  const char* name;

  // out[j] = sum_k ((q[k] - Xt[k*n + j]) * inv_len[k])^2  for j in [0, n).
  // Xt holds a block of n points transposed: one contiguous row per dimension.
  void (*scaled_sqdist)(const double* Xt, std::size_t n, std::size_t d,
                        const double* q, const double* inv_len, double* out);

  // In place Matern 5/2 transform of squared scaled distances:
  // v[j] = sv * (1 + sqrt(5)*r + 5/3*r^2) * exp(-sqrt(5)*r), r = sqrt(v[j]).
  void (*matern52_from_sqdist)(double* v, std::size_t n, double signal_variance);

  // w[j] = 1 / (1 + exp(c[j]))  (the feasibility weight 1 - sigmoid(c)).
  void (*feasibility_weight)(const double* c, std::size_t n, double* w);

  // Solve L * X = B in place, L lower-triangular n x n row-major with leading
  // dimension n, B row-major n x m. Vectorized across the m right-hand sides.
  void (*solve_lower_multi)(const double* L, std::size_t n, double* B, std::size_t m);

  // Solve L^T * X = B in place (same storage conventions).
  void (*solve_lower_transpose_multi)(const double* L, std::size_t n, double* B,
                                      std::size_t m);

  double (*dot)(const double* a, const double* b, std::size_t n);

  // y[j] += a * x[j]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);

  // out[j] = sum_i v[i] * W[i*m + j]  (v^T W for row-major W, n x m).
  void (*weighted_colsum)(const double* v, const double* W, std::size_t n,
                          std::size_t m, double* out);

  // out[j] += sum_i W[i*m + j]^2  (column sums of squares).
  void (*colsum_squares_acc)(const double* W, std::size_t n, std::size_t m,
                             double* out);
};

// Scalar reference lane; always available.
const Ops& scalar_ops();

// AVX2+FMA lane; null when the build target or the running CPU lacks support.
const Ops* avx2_ops();

// Best supported lane, resolved once per process.
const Ops& active();

}  // namespace nebo::kern
