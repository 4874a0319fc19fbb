#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "nebo/evaluator.hpp"

namespace oracle {
namespace {

using Mat = std::vector<std::vector<long double>>;

Mat invert(Mat a) {
  const std::size_t n = a.size();
  Mat inv(n, std::vector<long double>(n, 0.0L));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0L;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(inv[col], inv[piv]);
    const long double p = a[col][col];
    if (p == 0.0L) throw std::runtime_error("oracle: singular matrix");
    for (std::size_t c = 0; c < n; ++c) {
      a[col][c] /= p;
      inv[col][c] /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const long double f = a[r][col];
      if (f == 0.0L) continue;
      for (std::size_t c = 0; c < n; ++c) {
        a[r][c] -= f * a[col][c];
        inv[r][c] -= f * inv[col][c];
      }
    }
  }
  return inv;
}

}  // namespace

DensePosterior dense_gp_posterior(const nebo::GpModel& m, const nebo::Matrix& xq) {
  const std::size_t n = m.size(), q = xq.rows(), d = m.dimension();
  const auto& kp = m.kernel();
  const auto pn = m.point_noise_standardized();
  const auto y = m.targets_standardized();

  auto kfun = [&](const double* a, const double* b) {
    return static_cast<long double>(
        nebo::matern52({a, d}, {b, d}, kp));
  };

  Mat k(n, std::vector<long double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      k[i][j] = kfun(m.inputs().row(i), m.inputs().row(j));
      if (i == j) k[i][j] += pn[i] + m.jitter();
    }
  const Mat kinv = invert(std::move(k));

  Mat kx(n, std::vector<long double>(q));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < q; ++j) kx[i][j] = kfun(m.inputs().row(i), xq.row(j));

  DensePosterior out;
  out.mean.resize(q);
  out.cov.assign(q, std::vector<double>(q, 0.0));

  const long double shift = m.target_shift();
  const long double scale = m.target_scale();
  for (std::size_t j = 0; j < q; ++j) {
    long double mj = kp.constant_mean;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        mj += kx[a][j] * kinv[a][b] * (y[b] - kp.constant_mean);
    out.mean[j] = static_cast<double>(shift + scale * mj);
  }
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      long double c = kfun(xq.row(i), xq.row(j));
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) c -= kx[a][i] * kinv[a][b] * kx[b][j];
      out.cov[i][j] = static_cast<double>(scale * scale * c);
    }
  }
  return out;
}

double radical_inverse(std::uint64_t index, unsigned base) {
  double inv_base = 1.0 / static_cast<double>(base);
  double scale = inv_base;
  double out = 0.0;
  while (index) {
    out += static_cast<double>(index % base) * scale;
    index /= base;
    scale *= inv_base;
  }
  return out;
}

std::pair<double, double> mc_expected_improvement(double mean, double sd, double best,
                                                  std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> normal(mean, sd);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double v = std::max(normal(eng) - best, 0.0);
    sum += v;
    sumsq += v * v;
  }
  const double nn = static_cast<double>(draws);
  const double avg = sum / nn;
  const double var = std::max(sumsq / nn - avg * avg, 0.0);
  return {avg, std::sqrt(var / nn)};
}

double wilcoxon_enumerated_p(std::span<const double> a, std::span<const double> b) {
  std::vector<double> mag;
  std::vector<int> sign;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d == 0.0) continue;
    mag.push_back(std::abs(d));
    sign.push_back(d > 0 ? 1 : 0);
  }
  const std::size_t n = mag.size();
  if (n == 0) throw std::invalid_argument("oracle wilcoxon: all zero");
  if (n > 20) throw std::invalid_argument("oracle wilcoxon: enumeration too large");

  // average ranks of |d|
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return mag[x] < mag[y]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && mag[order[j + 1]] == mag[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg;
    i = j + 1;
  }

  double w_obs = 0.0, total = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    total += rank[t];
    if (sign[t]) w_obs += rank[t];
  }
  const double mu = total / 2.0;
  const double dev = std::abs(w_obs - mu);

  std::uint64_t hits = 0;
  const std::uint64_t all = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < all; ++mask) {
    double w = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      if (mask & (std::uint64_t{1} << t)) w += rank[t];
    if (std::abs(w - mu) >= dev - 1e-9) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(all);
}

BoxMinimum grid_minimum(const std::vector<std::pair<double, double>>& box,
                        std::size_t grid_per_dim,
                        double (*f)(std::span<const double>)) {
  const std::size_t d = box.size();
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  BoxMinimum best{std::vector<double>(d, 0.0), std::numeric_limits<double>::infinity()};

  // full grid scan
  for (;;) {
    for (std::size_t k = 0; k < d; ++k) {
      x[k] = box[k].first + (box[k].second - box[k].first) *
                                static_cast<double>(idx[k]) /
                                static_cast<double>(grid_per_dim - 1);
    }
    const double v = f(x);
    if (v < best.value) {
      best.value = v;
      best.x = x;
    }
    std::size_t k = 0;
    while (k < d && ++idx[k] == grid_per_dim) idx[k++] = 0;
    if (k == d) break;
  }

  // coordinate refinement
  double step = 1.0 / static_cast<double>(grid_per_dim);
  for (; step > 1e-9; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (std::size_t k = 0; k < d; ++k) {
        for (const double sgn : {+1.0, -1.0}) {
          std::vector<double> trial = best.x;
          trial[k] = std::clamp(trial[k] + sgn * step * (box[k].second - box[k].first),
                                box[k].first, box[k].second);
          const double v = f(trial);
          if (v < best.value) {
            best.value = v;
            best.x = trial;
            moved = true;
          }
        }
      }
    }
  }
  return best;
}

double branin_wrapper(std::span<const double> x) { return nebo::branin(x[0], x[1]); }

double hartmann6_wrapper(std::span<const double> x) { return nebo::hartmann6(x); }

}  // namespace oracle
