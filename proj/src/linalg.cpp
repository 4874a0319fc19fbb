#include "nebo/linalg.hpp"

#include <cassert>
#include <cmath>

#include "nebo/kernels.hpp"

namespace nebo {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    assert(rows[i].size() == m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void Matrix::append_row(std::span<const double> r) {
  if (rows_ == 0 && cols_ == 0) cols_ = r.size();
  assert(r.size() == cols_);
  a_.insert(a_.end(), r.begin(), r.end());
  ++rows_;
}

std::vector<double> Matrix::transposed() const {
  std::vector<double> t(rows_ * cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t[j * rows_ + i] = a_[i * cols_ + j];
  return t;
}

bool cholesky_inplace(Matrix& a) {
  assert(a.rows() == a.cols());
  const std::size_t n = a.rows();
  const auto& k = kern::active();
  for (std::size_t j = 0; j < n; ++j) {
    double* rj = a.row(j);
    const double diag = a(j, j) - k.dot(rj, rj, j);
    if (!(diag > 0.0) || !std::isfinite(diag)) return false;
    const double ljj = std::sqrt(diag);
    a(j, j) = ljj;
    const double inv = 1.0 / ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double* ri = a.row(i);
      ri[j] = (ri[j] - k.dot(ri, rj, j)) * inv;
    }
  }
  // zero the strict upper triangle so L can be used directly
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = 0.0;
  return true;
}

void solve_lower(const Matrix& L, std::vector<double>& b) {
  assert(L.rows() == b.size());
  kern::active().solve_lower_multi(L.data(), L.rows(), b.data(), 1);
}

void solve_lower_transpose(const Matrix& L, std::vector<double>& b) {
  assert(L.rows() == b.size());
  kern::active().solve_lower_transpose_multi(L.data(), L.rows(), b.data(), 1);
}

std::vector<double> solve_cholesky(const Matrix& L, std::span<const double> rhs) {
  std::vector<double> x(rhs.begin(), rhs.end());
  solve_lower(L, x);
  solve_lower_transpose(L, x);
  return x;
}

}  // namespace nebo
