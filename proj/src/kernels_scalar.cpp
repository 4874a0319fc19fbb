#include "nebo/kernels.hpp"

#include <cmath>

namespace nebo::kern {
namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687747;

void scaled_sqdist(const double* Xt, std::size_t n, std::size_t d, const double* q,
                   const double* inv_len, double* out) {
  for (std::size_t j = 0; j < n; ++j) out[j] = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double qk = q[k];
    const double il = inv_len[k];
    const double* xk = Xt + k * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double diff = (qk - xk[j]) * il;
      out[j] += diff * diff;
    }
  }
}

void matern52_from_sqdist(double* v, std::size_t n, double signal_variance) {
  for (std::size_t j = 0; j < n; ++j) {
    const double r2 = v[j];
    const double r = std::sqrt(r2);
    v[j] = signal_variance * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) * std::exp(-kSqrt5 * r);
  }
}

void feasibility_weight(const double* c, std::size_t n, double* w) {
  for (std::size_t j = 0; j < n; ++j) w[j] = 1.0 / (1.0 + std::exp(c[j]));
}

void solve_lower_multi(const double* L, std::size_t n, double* B, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* bi = B + i * m;
    for (std::size_t j = 0; j < i; ++j) {
      const double lij = L[i * n + j];
      const double* bj = B + j * m;
      for (std::size_t c = 0; c < m; ++c) bi[c] -= lij * bj[c];
    }
    const double inv = 1.0 / L[i * n + i];
    for (std::size_t c = 0; c < m; ++c) bi[c] *= inv;
  }
}

void solve_lower_transpose_multi(const double* L, std::size_t n, double* B, std::size_t m) {
  for (std::size_t ii = n; ii-- > 0;) {
    double* bi = B + ii * m;
    for (std::size_t j = ii + 1; j < n; ++j) {
      const double lji = L[j * n + ii];
      const double* bj = B + j * m;
      for (std::size_t c = 0; c < m; ++c) bi[c] -= lji * bj[c];
    }
    const double inv = 1.0 / L[ii * n + ii];
    for (std::size_t c = 0; c < m; ++c) bi[c] *= inv;
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void weighted_colsum(const double* v, const double* W, std::size_t n, std::size_t m,
                     double* out) {
  for (std::size_t j = 0; j < m; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = v[i];
    const double* wi = W + i * m;
    for (std::size_t j = 0; j < m; ++j) out[j] += vi * wi[j];
  }
}

void colsum_squares_acc(const double* W, std::size_t n, std::size_t m, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* wi = W + i * m;
    for (std::size_t j = 0; j < m; ++j) out[j] += wi[j] * wi[j];
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{
      "scalar",
      scaled_sqdist,
      matern52_from_sqdist,
      feasibility_weight,
      solve_lower_multi,
      solve_lower_transpose_multi,
      dot,
      axpy,
      weighted_colsum,
      colsum_squares_acc,
  };
  return ops;
}

}  // namespace nebo::kern
