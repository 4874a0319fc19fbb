#pragma once

#include <optional>
#include <vector>

#include "nebo/gp.hpp"
#include "nebo/linalg.hpp"

// Shared covariance-assembly internals, used by the GP core and by the
// acquisition fast path. Not part of the stable surface.
namespace nebo::gp_detail {

// Symmetric kernel matrix over a point block (no noise diagonal); xt is the
// d x n transposed block. When r2_out is non-null the scaled squared
// distances are stored alongside.
void build_kernel_matrix(const std::vector<double>& xt, std::size_t n, std::size_t d,
                         const KernelParams& kp, Matrix& k, Matrix* r2_out);

// Cross-kernel block, rows = training points, cols = queries.
Matrix build_cross_matrix(const std::vector<double>& xt, std::size_t n, std::size_t d,
                          const Matrix& xq, const KernelParams& kp);

// Cholesky with the escalating jitter ladder; returns the jitter used.
std::optional<double> factorize(const Matrix& k_noisy, Matrix& chol_out);

}  // namespace nebo::gp_detail
