#include "nebo/gp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "nebo/gp_internal.hpp"
#include "nebo/kernels.hpp"
#include "nebo/rng.hpp"

namespace nebo {
namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687747;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kNoiseFloor = 1e-12;  // raw-unit floor for modeled noise

constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-4;

struct Bounds {
  double lo, hi;
};
constexpr Bounds kLengthscaleBounds{1e-3, 1e3};
constexpr Bounds kSignalVarBounds{1e-6, 1e3};
constexpr Bounds kNoiseVarBounds{1e-10, 1e2};

double clamp(double v, const Bounds& b) { return std::min(std::max(v, b.lo), b.hi); }

}  // namespace

namespace gp_detail {

void build_kernel_matrix(const std::vector<double>& xt, std::size_t n, std::size_t d,
                         const KernelParams& kp, Matrix& k, Matrix* r2_out) {
  const auto& ops = kern::active();
  std::vector<double> inv_len(d);
  for (std::size_t i = 0; i < d; ++i) inv_len[i] = 1.0 / kp.lengthscales[i];
  std::vector<double> point(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) point[j] = xt[j * n + i];
    double* row = k.row(i);
    ops.scaled_sqdist(xt.data(), n, d, point.data(), inv_len.data(), row);
    if (r2_out) std::copy(row, row + n, r2_out->row(i));
    ops.matern52_from_sqdist(row, n, kp.signal_variance);
  }
}

Matrix build_cross_matrix(const std::vector<double>& xt, std::size_t n, std::size_t d,
                          const Matrix& xq, const KernelParams& kp) {
  const auto& ops = kern::active();
  const std::size_t m = xq.rows();
  std::vector<double> qt = xq.transposed();
  std::vector<double> inv_len(d);
  for (std::size_t i = 0; i < d; ++i) inv_len[i] = 1.0 / kp.lengthscales[i];
  Matrix kx(n, m);
  std::vector<double> point(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) point[j] = xt[j * n + i];
    double* row = kx.row(i);
    ops.scaled_sqdist(qt.data(), m, d, point.data(), inv_len.data(), row);
    ops.matern52_from_sqdist(row, m, kp.signal_variance);
  }
  return kx;
}

std::optional<double> factorize(const Matrix& k_noisy, Matrix& chol_out) {
  const std::size_t n = k_noisy.rows();
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += k_noisy(i, i);
  const double base = std::max(trace / static_cast<double>(n), 1e-12);
  for (double mul = kJitterStart; mul <= kJitterMax * 1.0000001; mul *= 10.0) {
    const double jitter = mul * base;
    chol_out = k_noisy;
    for (std::size_t i = 0; i < n; ++i) chol_out(i, i) += jitter;
    if (cholesky_inplace(chol_out)) return jitter;
  }
  return std::nullopt;
}

}  // namespace gp_detail

namespace {

using gp_detail::build_kernel_matrix;
using gp_detail::build_cross_matrix;
using gp_detail::factorize;

double standardized_mll(const Matrix& chol, std::span<const double> alpha,
                        std::span<const double> y) {
  const std::size_t n = y.size();
  double fit = 0.0;
  for (std::size_t i = 0; i < n; ++i) fit += alpha[i] * y[i];
  double logdet = 0.0;
  for (std::size_t i = 0; i < n; ++i) logdet += std::log(chol(i, i));
  return -0.5 * fit - logdet - 0.5 * static_cast<double>(n) * kLog2Pi;
}

// Marginal-likelihood objective over theta = [log l_0..d-1, log sv, (log sn2)].
struct MllObjective {
  const std::vector<double>& xt;
  std::size_t n, d;
  std::span<const double> y;                 // standardized targets
  const std::vector<double>* fixed_noise;    // standardized; null when inferred
  bool infer_noise;

  std::size_t n_params() const { return d + 1 + (infer_noise ? 1 : 0); }

  KernelParams kernel_of(std::span<const double> theta) const {
    KernelParams kp;
    kp.lengthscales.resize(d);
    for (std::size_t i = 0; i < d; ++i) kp.lengthscales[i] = std::exp(theta[i]);
    kp.signal_variance = std::exp(theta[d]);
    return kp;
  }

  void apply_noise(std::span<const double> theta, Matrix& k) const {
    if (infer_noise) {
      const double sn2 = std::exp(theta[d + 1]);
      for (std::size_t i = 0; i < n; ++i) k(i, i) += sn2;
    } else {
      for (std::size_t i = 0; i < n; ++i) k(i, i) += (*fixed_noise)[i];
    }
  }

  double value(std::span<const double> theta) const {
    const KernelParams kp = kernel_of(theta);
    Matrix k(n, n);
    build_kernel_matrix(xt, n, d, kp, k, nullptr);
    apply_noise(theta, k);
    Matrix chol;
    if (!factorize(k, chol)) return -std::numeric_limits<double>::infinity();
    const std::vector<double> alpha = solve_cholesky(chol, y);
    return standardized_mll(chol, alpha, y);
  }

  double value_and_grad(std::span<const double> theta, std::vector<double>& grad) const {
    const KernelParams kp = kernel_of(theta);
    Matrix kf(n, n), r2(n, n);
    build_kernel_matrix(xt, n, d, kp, kf, &r2);
    Matrix k = kf;
    apply_noise(theta, k);
    Matrix chol;
    const auto jit = factorize(k, chol);
    if (!jit) {
      std::fill(grad.begin(), grad.end(), 0.0);
      return -std::numeric_limits<double>::infinity();
    }
    const std::vector<double> alpha = solve_cholesky(chol, y);
    const double mll = standardized_mll(chol, alpha, y);

    // G = alpha alpha^T - K^{-1}
    Matrix g(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) g(i, i) = 1.0;
    kern::active().solve_lower_multi(chol.data(), n, g.data(), n);
    kern::active().solve_lower_transpose_multi(chol.data(), n, g.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) g(i, j) = alpha[i] * alpha[j] - g(i, j);

    // dK/dlog sv = Kf
    double gsv = 0.0;
    for (std::size_t i = 0; i < n * n; ++i) gsv += g.data()[i] * kf.data()[i];
    grad[d] = 0.5 * gsv;

    // dK/dlog l_k = (5/3) sv (1 + sqrt5 r) exp(-sqrt5 r) * dk2/l_k^2.
    // Precompute the shared factor times G.
    Matrix w(n, n);
    for (std::size_t i = 0; i < n * n; ++i) {
      const double r = std::sqrt(r2.data()[i]);
      w.data()[i] = g.data()[i] * (5.0 / 3.0) * kp.signal_variance *
                    (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
    }
    for (std::size_t kdim = 0; kdim < d; ++kdim) {
      const double* xk = xt.data() + kdim * n;
      const double inv_l2 = 1.0 / (kp.lengthscales[kdim] * kp.lengthscales[kdim]);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double xi = xk[i];
        const double* wrow = w.row(i);
        for (std::size_t j = 0; j < n; ++j) {
          const double delta = xi - xk[j];
          acc += wrow[j] * delta * delta;
        }
      }
      grad[kdim] = 0.5 * acc * inv_l2;
    }

    if (infer_noise) {
      const double sn2 = std::exp(theta[d + 1]);
      double tr = 0.0;
      for (std::size_t i = 0; i < n; ++i) tr += g(i, i);
      grad[d + 1] = 0.5 * sn2 * tr;
    }
    return mll;
  }
};

std::vector<Bounds> parameter_bounds(const MllObjective& obj) {
  std::vector<Bounds> b;
  for (std::size_t i = 0; i < obj.d; ++i)
    b.push_back({std::log(kLengthscaleBounds.lo), std::log(kLengthscaleBounds.hi)});
  b.push_back({std::log(kSignalVarBounds.lo), std::log(kSignalVarBounds.hi)});
  if (obj.infer_noise)
    b.push_back({std::log(kNoiseVarBounds.lo), std::log(kNoiseVarBounds.hi)});
  return b;
}

// Projected gradient ascent with Armijo backtracking. Monotone by
// construction, so the fitted likelihood can never drop below the start.
double ascend(const MllObjective& obj, std::vector<double>& theta) {
  const auto bounds = parameter_bounds(obj);
  const std::size_t p = theta.size();
  for (std::size_t i = 0; i < p; ++i) theta[i] = clamp(theta[i], bounds[i]);

  std::vector<double> grad(p, 0.0), dir(p), trial(p);
  double f = obj.value_and_grad(theta, grad);
  if (!std::isfinite(f)) return f;

  double step = 0.1;
  for (int iter = 0; iter < 100; ++iter) {
    double gmax = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      dir[i] = grad[i];
      if (theta[i] >= bounds[i].hi && dir[i] > 0) dir[i] = 0;
      if (theta[i] <= bounds[i].lo && dir[i] < 0) dir[i] = 0;
      gmax = std::max(gmax, std::abs(dir[i]));
    }
    if (gmax < 1e-5) break;

    bool accepted = false;
    double t = step;
    for (int h = 0; h < 30 && !accepted; ++h, t *= 0.5) {
      double gdelta = 0.0;
      for (std::size_t i = 0; i < p; ++i) {
        trial[i] = clamp(theta[i] + t * dir[i], bounds[i]);
        gdelta += grad[i] * (trial[i] - theta[i]);
      }
      if (gdelta <= 0.0) continue;
      const double ft = obj.value(trial);
      if (ft > f + 1e-4 * gdelta) {
        theta = trial;
        f = obj.value_and_grad(theta, grad);
        step = std::min(t * 2.0, 1.0);
        accepted = true;
      }
    }
    if (!accepted) break;
  }
  return f;
}

std::vector<double> fit_hyperparameters(const MllObjective& obj, std::uint64_t seed) {
  const std::size_t p = obj.n_params();
  std::vector<double> best_theta;
  double best_f = -std::numeric_limits<double>::infinity();
  constexpr int kRestarts = 5;
  for (int r = 0; r < kRestarts; ++r) {
    std::vector<double> theta(p);
    if (r == 0) {
      for (std::size_t i = 0; i < obj.d; ++i) theta[i] = std::log(0.5);
      theta[obj.d] = 0.0;
      if (obj.infer_noise) theta[obj.d + 1] = std::log(1e-2);
    } else {
      Rng rng(derive_seed(seed, 0xF17, static_cast<std::uint64_t>(r)));
      for (std::size_t i = 0; i < obj.d; ++i)
        theta[i] = rng.uniform(std::log(0.05), std::log(2.0));
      theta[obj.d] = rng.uniform(std::log(0.1), std::log(10.0));
      if (obj.infer_noise) theta[obj.d + 1] = rng.uniform(std::log(1e-4), std::log(1.0));
    }
    const double f = ascend(obj, theta);
    if (f > best_f) {
      best_f = f;
      best_theta = theta;
    }
  }
  if (best_theta.empty()) throw SingularModelError("covariance not factorizable at any restart");
  return best_theta;
}

}  // namespace

double matern52(std::span<const double> a, std::span<const double> b,
                const KernelParams& k) {
  if (a.size() != b.size() || a.size() != k.lengthscales.size())
    throw std::invalid_argument("matern52: dimension mismatch");
  double r2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = (a[i] - b[i]) / k.lengthscales[i];
    r2 += diff * diff;
  }
  const double r = std::sqrt(r2);
  return k.signal_variance * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) * std::exp(-kSqrt5 * r);
}

NoiseSpec NoiseSpec::fixed(std::vector<double> variances) {
  for (double v : variances)
    if (!(v >= 0.0)) throw std::invalid_argument("fixed noise variances must be >= 0");
  NoiseSpec s;
  s.kind = NoiseKind::Fixed;
  s.fixed_variances = std::move(variances);
  return s;
}

void GpModel::refactorize() {
  const std::size_t n = x_.rows();
  Matrix k(n, n);
  build_kernel_matrix(xt_, n, x_.cols(), kernel_, k, nullptr);
  for (std::size_t i = 0; i < n; ++i) k(i, i) += point_noise_std_[i];
  const auto jitter = factorize(k, chol_);
  if (!jitter) throw SingularModelError("covariance not factorizable after jitter escalation");
  jitter_ = *jitter;
  alpha_ = solve_cholesky(chol_, y_std_);
  mll_ = standardized_mll(chol_, alpha_, y_std_);
}

GpModel GpModel::fit(const Matrix& X, std::span<const double> y, NoiseSpec noise,
                     std::uint64_t seed) {
  if (X.rows() == 0) throw std::invalid_argument("fit needs at least one observation");
  if (X.rows() != y.size()) throw std::invalid_argument("fit: |y| must match rows of X");
  if (noise.kind == NoiseKind::Fixed && noise.fixed_variances.size() != y.size())
    throw std::invalid_argument("fit: fixed noise needs one variance per observation");

  GpModel m;
  m.x_ = X;
  m.xt_ = X.transposed();
  m.y_raw_.assign(y.begin(), y.end());

  const std::size_t n = X.rows();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  m.y_shift_ = mean;
  m.y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
  m.y_std_.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.y_std_[i] = (y[i] - m.y_shift_) / m.y_scale_;

  std::vector<double> fixed_std;
  const bool infer = noise.kind == NoiseKind::Inferred;
  if (!infer) {
    fixed_std.resize(n);
    const double s2 = m.y_scale_ * m.y_scale_;
    for (std::size_t i = 0; i < n; ++i) fixed_std[i] = noise.fixed_variances[i] / s2;
  }

  MllObjective obj{m.xt_, n, X.cols(), m.y_std_, infer ? nullptr : &fixed_std, infer};
  const auto theta = fit_hyperparameters(obj, seed);

  m.kernel_ = obj.kernel_of(theta);
  m.noise_ = std::move(noise);
  if (infer) {
    m.noise_.inferred_variance = std::exp(theta[X.cols() + 1]);
    m.point_noise_std_.assign(n, m.noise_.inferred_variance);
  } else {
    m.point_noise_std_ = std::move(fixed_std);
  }
  m.refactorize();
  return m;
}

GpModel GpModel::fit_heteroskedastic(const Matrix& X, std::span<const double> y,
                                     std::span<const double> var_y, std::uint64_t seed) {
  if (y.size() != var_y.size())
    throw std::invalid_argument("fit_heteroskedastic: var_y must match y");
  for (double v : var_y)
    if (!(v >= 0.0)) throw std::invalid_argument("fit_heteroskedastic: variances must be >= 0");

  // target standardization must match the outer fit below
  const std::size_t n = y.size();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double y_scale = var > 1e-24 ? std::sqrt(var) : 1.0;
  const double s2 = y_scale * y_scale;

  std::vector<double> log_var(n);
  for (std::size_t i = 0; i < n; ++i) log_var[i] = std::log((var_y[i] + kNoiseFloor) / s2);
  auto inner = std::make_shared<GpModel>(
      GpModel::fit(X, log_var, NoiseSpec::inferred(), derive_seed(seed, 1)));

  std::vector<double> point_var_raw(n);
  std::vector<double> mean_t, var_t;
  inner->posterior_diag(X, mean_t, var_t);
  for (std::size_t i = 0; i < n; ++i)
    point_var_raw[i] = std::max(std::exp(mean_t[i]) * s2, kNoiseFloor);

  GpModel m = GpModel::fit(X, y, NoiseSpec::fixed(point_var_raw), derive_seed(seed, 2));
  m.noise_.kind = NoiseKind::Heteroskedastic;
  m.noise_.noise_model = std::move(inner);
  return m;
}

double GpModel::predicted_noise_variance(std::span<const double> x) const {
  switch (noise_.kind) {
    case NoiseKind::Inferred:
      return noise_.inferred_variance * y_scale_ * y_scale_;
    case NoiseKind::Fixed: {
      double s = 0.0;
      for (double v : noise_.fixed_variances) s += v;
      return noise_.fixed_variances.empty() ? 0.0 : s / noise_.fixed_variances.size();
    }
    case NoiseKind::Heteroskedastic: {
      const double t = noise_.noise_model->posterior_mean_at(x);
      return std::max(std::exp(t) * y_scale_ * y_scale_, kNoiseFloor);
    }
  }
  return 0.0;
}

void GpModel::posterior_diag(const Matrix& Xq, std::vector<double>& mean,
                             std::vector<double>& var) const {
  if (Xq.rows() == 0) throw std::invalid_argument("posterior: empty query");
  if (Xq.cols() != x_.cols()) throw std::invalid_argument("posterior: dimension mismatch");
  const std::size_t n = x_.rows(), m = Xq.rows();
  const auto& ops = kern::active();

  Matrix kx = build_cross_matrix(xt_, n, x_.cols(), Xq, kernel_);
  mean.assign(m, 0.0);
  ops.weighted_colsum(alpha_.data(), kx.data(), n, m, mean.data());

  ops.solve_lower_multi(chol_.data(), n, kx.data(), m);  // kx becomes V
  var.assign(m, 0.0);
  ops.colsum_squares_acc(kx.data(), n, m, var.data());
  const double s2 = y_scale_ * y_scale_;
  for (std::size_t j = 0; j < m; ++j) {
    var[j] = std::max(kernel_.signal_variance - var[j], 0.0) * s2;
    mean[j] = y_shift_ + y_scale_ * (mean[j] + kernel_.constant_mean);
  }
}

double GpModel::posterior_mean_at(std::span<const double> x) const {
  Matrix q(1, x.size());
  std::copy(x.begin(), x.end(), q.row(0));
  std::vector<double> mean, var;
  posterior_diag(q, mean, var);
  return mean[0];
}

namespace {
// mean and covariance in standardized units
void posterior_std_full(const GpModel& m, const Matrix& xq, std::vector<double>& mean,
                        Matrix& cov) {
  const std::size_t n = m.size(), q = xq.rows(), d = m.dimension();
  const auto& ops = kern::active();
  const auto xt = m.inputs_transposed();
  std::vector<double> xtv(xt.begin(), xt.end());

  Matrix kx = build_cross_matrix(xtv, n, d, xq, m.kernel());
  mean.assign(q, 0.0);
  // alpha is private; recompute from chol and standardized targets
  const auto y = m.targets_standardized();
  std::vector<double> alpha(y.begin(), y.end());
  ops.solve_lower_multi(m.cholesky().data(), n, alpha.data(), 1);
  ops.solve_lower_transpose_multi(m.cholesky().data(), n, alpha.data(), 1);
  ops.weighted_colsum(alpha.data(), kx.data(), n, q, mean.data());
  for (std::size_t j = 0; j < q; ++j) mean[j] += m.kernel().constant_mean;

  std::vector<double> qt = xq.transposed();
  std::vector<double> inv_len(d);
  for (std::size_t i = 0; i < d; ++i) inv_len[i] = 1.0 / m.kernel().lengthscales[i];
  cov = Matrix(q, q);
  std::vector<double> point(d);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t k = 0; k < d; ++k) point[k] = qt[k * q + i];
    double* row = cov.row(i);
    ops.scaled_sqdist(qt.data(), q, d, point.data(), inv_len.data(), row);
    ops.matern52_from_sqdist(row, q, m.kernel().signal_variance);
  }

  ops.solve_lower_multi(m.cholesky().data(), n, kx.data(), q);  // V
  for (std::size_t r = 0; r < n; ++r) {
    const double* vr = kx.row(r);
    for (std::size_t a = 0; a < q; ++a) ops.axpy(-vr[a], vr, cov.row(a), q);
  }
  // numerical symmetrization
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = i + 1; j < q; ++j) {
      const double v = 0.5 * (cov(i, j) + cov(j, i));
      cov(i, j) = cov(j, i) = v;
    }
}
}  // namespace

PosteriorDistribution GpModel::posterior(const Matrix& Xq) const {
  if (Xq.rows() == 0) throw std::invalid_argument("posterior: empty query");
  if (Xq.cols() != x_.cols()) throw std::invalid_argument("posterior: dimension mismatch");
  PosteriorDistribution p;
  posterior_std_full(*this, Xq, p.mean, p.covariance);
  const double s2 = y_scale_ * y_scale_;
  for (auto& v : p.mean) v = y_shift_ + y_scale_ * v;
  for (std::size_t i = 0; i < p.covariance.rows() * p.covariance.cols(); ++i)
    p.covariance.data()[i] *= s2;
  return p;
}

Matrix GpModel::sample_joint(const Matrix& Xq, std::size_t count, std::uint64_t seed) const {
  if (count == 0) throw std::invalid_argument("sample_joint: count must be >= 1");
  if (Xq.rows() == 0) throw std::invalid_argument("sample_joint: empty query");
  if (Xq.cols() != x_.cols())
    throw std::invalid_argument("sample_joint: dimension mismatch");
  const std::size_t m = Xq.rows();

  std::vector<double> mean;
  Matrix cov;
  posterior_std_full(*this, Xq, mean, cov);
  Matrix chol;
  if (!factorize(cov, chol))
    throw SingularModelError("posterior covariance not factorizable for sampling");

  Rng rng(seed);
  Matrix draws(count, m);
  std::vector<double> z(m);
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t j = 0; j < m; ++j) z[j] = rng.normal();
    double* row = draws.row(r);
    for (std::size_t j = 0; j < m; ++j)
      row[j] = y_shift_ + y_scale_ * (mean[j] + kern::active().dot(chol.row(j), z.data(), j + 1));
  }
  return draws;
}

GpModel GpModel::condition(const Matrix& Xf, std::span<const double> yf) const {
  if (Xf.rows() != yf.size())
    throw std::invalid_argument("condition: |yf| must match rows of Xf");
  if (Xf.rows() == 0) return *this;
  if (Xf.cols() != x_.cols()) throw std::invalid_argument("condition: dimension mismatch");

  GpModel m = *this;
  bool appended = false;
  for (std::size_t f = 0; f < Xf.rows(); ++f) {
    const double* xf = Xf.row(f);
    bool skip = false;
    for (std::size_t r = 0; r < m.x_.rows(); ++r) {
      if (m.point_noise_std_[r] != 0.0) continue;
      double d2 = 0.0;
      const double* xr = m.x_.row(r);
      for (std::size_t k = 0; k < m.x_.cols(); ++k) d2 += (xr[k] - xf[k]) * (xr[k] - xf[k]);
      if (d2 > 1e-20) continue;
      if (std::abs(m.y_raw_[r] - yf[f]) <= 1e-8 * std::max(1.0, std::abs(yf[f]))) {
        skip = true;
        break;
      }
      throw SingularModelError("conditioning on a noiseless duplicate with conflicting value");
    }
    if (skip) continue;
    m.x_.append_row({xf, x_.cols()});
    m.y_raw_.push_back(yf[f]);
    m.y_std_.push_back((yf[f] - m.y_shift_) / m.y_scale_);
    m.point_noise_std_.push_back(0.0);
    appended = true;
  }
  if (!appended) return m;
  m.xt_ = m.x_.transposed();
  m.refactorize();
  return m;
}

}  // namespace nebo
