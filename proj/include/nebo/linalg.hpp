#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nebo {

// Dense row-major matrix. Just enough linear algebra for exact GP regression;
// the heavy loops live in the kernels module.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  double* row(std::size_t i) { return a_.data() + i * cols_; }
  const double* row(std::size_t i) const { return a_.data() + i * cols_; }

  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  void append_row(std::span<const double> r);

  // d x n transposed copy (one contiguous block per column of *this).
  std::vector<double> transposed() const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

// In-place Cholesky factorization of a symmetric positive definite matrix.
// On success the lower triangle holds L (upper triangle is zeroed) and true
// is returned; returns false when a pivot is not strictly positive.
bool cholesky_inplace(Matrix& a);

// Solve L x = b / L^T x = b for vector b in place.
void solve_lower(const Matrix& L, std::vector<double>& b);
void solve_lower_transpose(const Matrix& L, std::vector<double>& b);

// x = (L L^T)^{-1} rhs
std::vector<double> solve_cholesky(const Matrix& L, std::span<const double> rhs);

}  // namespace nebo
