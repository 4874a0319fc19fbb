#include "nebo/acquisition.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "nebo/gp_internal.hpp"
#include "nebo/kernels.hpp"
#include "nebo/lowdisc.hpp"
#include "nebo/rng.hpp"

namespace nebo {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }
double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

}  // namespace

double expected_improvement(double mean, double std_dev, double best) {
  if (std_dev < 0.0) throw std::invalid_argument("expected_improvement: negative std");
  const double delta = mean - best;
  if (std_dev == 0.0) return std::max(delta, 0.0);
  const double z = delta / std_dev;
  return std::max(delta * normal_cdf(z) + std_dev * normal_pdf(z), 0.0);
}

double weighted_objective(double objective_value, double constraint_value) {
  // 1 - sigmoid(c) computed as 1/(1+e^c); stable at both tails
  return objective_value / (1.0 + std::exp(constraint_value));
}

FantasyEnsemble::FantasyEnsemble(const GpModel& objective, const GpModel& constraint,
                                 const Matrix& pending_encoded, std::size_t count,
                                 std::uint64_t seed)
    : count_(count), obj_base_(&objective), con_base_(&constraint),
      pending_(pending_encoded) {
  if (count == 0) throw std::invalid_argument("fantasy ensemble needs at least one pair");
  if (objective.size() != constraint.size() ||
      objective.dimension() != constraint.dimension())
    throw std::invalid_argument("objective and constraint models must share observations");
  const std::size_t n = objective.size();

  // One imaginary instance of the latent values per pair and channel, each
  // from its own sub-seed. Values at noiseless rows are pinned to the stored
  // targets; their posterior spread is only factorization jitter.
  auto draw = [n](const GpModel& base, std::size_t count_, std::uint64_t seed_) {
    Matrix samples(count_, n);
    for (std::size_t i = 0; i < count_; ++i) {
      const Matrix row = base.sample_joint(base.inputs(), 1, derive_seed(seed_, i));
      std::copy(row.row(0), row.row(0) + n, samples.row(i));
      for (std::size_t j = 0; j < n; ++j) {
        if (base.point_noise_standardized()[j] == 0.0) samples(i, j) = base.targets()[j];
      }
    }
    return samples;
  };
  obj_samples_ = draw(objective, count, derive_seed(seed, 0));
  con_samples_ = draw(constraint, count, derive_seed(seed, 1));

  if (pending_.rows() > 0) {
    std::vector<double> var;
    objective.posterior_diag(pending_, pending_obj_means_, var);
    constraint.posterior_diag(pending_, pending_con_means_, var);
  }

  incumbent_.assign(count, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      incumbent_[i] = std::max(incumbent_[i],
                               weighted_objective(obj_samples_(i, j), con_samples_(i, j)));
    // believer values at pending points count as incumbents too, so a pending
    // location itself cannot be re-proposed on its believed mean alone
    for (std::size_t t = 0; t < pending_.rows(); ++t)
      incumbent_[i] = std::max(
          incumbent_[i], weighted_objective(pending_obj_means_[t], pending_con_means_[t]));
  }

  obj_ = build_channel(objective, obj_samples_, pending_, pending_obj_means_);
  con_ = build_channel(constraint, con_samples_, pending_, pending_con_means_);
}

FantasyEnsemble::Channel FantasyEnsemble::build_channel(
    const GpModel& base, const Matrix& samples, const Matrix& pending,
    const std::vector<double>& pending_means) const {
  const std::size_t n = base.size(), d = base.dimension();
  Channel ch;
  ch.kernel = base.kernel();
  ch.y_shift = base.target_shift();
  ch.y_scale = base.target_scale();

  // original rows, then one noiseless fantasy row per noisy observation,
  // then the pending rows (identical locations across pairs)
  ch.x_aug = base.inputs();
  std::vector<double> noise(base.point_noise_standardized().begin(),
                            base.point_noise_standardized().end());
  std::vector<std::size_t> fantasy_rows;  // observation index per appended row
  for (std::size_t j = 0; j < n; ++j) {
    if (base.point_noise_standardized()[j] == 0.0) continue;  // value already pinned
    ch.x_aug.append_row({base.inputs().row(j), d});
    noise.push_back(0.0);
    fantasy_rows.push_back(j);
  }
  std::vector<std::size_t> pending_rows;
  for (std::size_t t = 0; t < pending.rows(); ++t) {
    ch.x_aug.append_row({pending.row(t), d});
    noise.push_back(0.0);
    pending_rows.push_back(t);
  }

  const std::size_t n_aug = ch.x_aug.rows();
  ch.xt = ch.x_aug.transposed();
  Matrix k(n_aug, n_aug);
  gp_detail::build_kernel_matrix(ch.xt, n_aug, d, ch.kernel, k, nullptr);
  for (std::size_t i = 0; i < n_aug; ++i) k(i, i) += noise[i];
  if (!gp_detail::factorize(k, ch.chol))
    throw SingularModelError("fantasy covariance not factorizable");

  ch.w = Matrix(n_aug, count_);
  const auto y_std = base.targets_standardized();
  const double mean_c = ch.kernel.constant_mean;
  for (std::size_t i = 0; i < count_; ++i) {
    for (std::size_t r = 0; r < n; ++r) ch.w(r, i) = y_std[r] - mean_c;
    for (std::size_t r = 0; r < fantasy_rows.size(); ++r)
      ch.w(n + r, i) = (samples(i, fantasy_rows[r]) - ch.y_shift) / ch.y_scale - mean_c;
    for (std::size_t r = 0; r < pending_rows.size(); ++r)
      ch.w(n + fantasy_rows.size() + r, i) =
          (pending_means[pending_rows[r]] - ch.y_shift) / ch.y_scale - mean_c;
  }
  kern::active().solve_lower_multi(ch.chol.data(), n_aug, ch.w.data(), count_);
  return ch;
}

std::vector<double> FantasyEnsemble::evaluate(const Matrix& xq) const {
  if (xq.rows() == 0) throw std::invalid_argument("nei: empty query");
  if (xq.cols() != obj_base_->dimension())
    throw std::invalid_argument("nei: query dimension mismatch");
  const std::size_t m = xq.rows(), k = count_;
  const auto& ops = kern::active();

  // per-channel: V = L^{-1} K*, fantasy means = V^T W, objective variance
  auto channel_means = [&](const Channel& ch, Matrix& means, std::vector<double>* var) {
    const std::size_t n_aug = ch.x_aug.rows();
    Matrix kx = gp_detail::build_cross_matrix(ch.xt, n_aug, xq.cols(), xq, ch.kernel);
    ops.solve_lower_multi(ch.chol.data(), n_aug, kx.data(), m);
    if (var) {
      var->assign(m, 0.0);
      ops.colsum_squares_acc(kx.data(), n_aug, m, var->data());
      for (std::size_t j = 0; j < m; ++j)
        (*var)[j] = std::max(ch.kernel.signal_variance - (*var)[j], 0.0) *
                    ch.y_scale * ch.y_scale;
    }
    means = Matrix(m, k, 0.0);
    for (std::size_t r = 0; r < n_aug; ++r) {
      const double* vr = kx.row(r);
      const double* wr = ch.w.row(r);
      for (std::size_t j = 0; j < m; ++j) ops.axpy(vr[j], wr, means.row(j), k);
    }
    const double shift = ch.y_shift + ch.y_scale * ch.kernel.constant_mean;
    for (std::size_t i = 0; i < m * k; ++i)
      means.data()[i] = shift + ch.y_scale * means.data()[i];
  };

  Matrix mu_f, mu_c;
  std::vector<double> var_f;
  channel_means(obj_, mu_f, &var_f);
  channel_means(con_, mu_c, nullptr);

  // feasibility weights from the constraint means, batched
  Matrix weight(m, k);
  ops.feasibility_weight(mu_c.data(), m * k, weight.data());

  std::vector<double> out(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const double sd_f = std::sqrt(var_f[j]);
    const double* muj = mu_f.row(j);
    const double* wj = weight.row(j);
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      acc += expected_improvement(muj[i] * wj[i], sd_f * wj[i], incumbent_[i]);
    out[j] = acc / static_cast<double>(k);
  }
  return out;
}

std::pair<GpModel, GpModel> FantasyEnsemble::pair(std::size_t i) const {
  assert(i < count_);
  const std::size_t n = obj_base_->size(), d = obj_base_->dimension();
  Matrix xc = obj_base_->inputs();
  for (std::size_t t = 0; t < pending_.rows(); ++t) xc.append_row({pending_.row(t), d});

  std::vector<double> yf(obj_samples_.row(i), obj_samples_.row(i) + n);
  yf.insert(yf.end(), pending_obj_means_.begin(), pending_obj_means_.end());
  std::vector<double> yc(con_samples_.row(i), con_samples_.row(i) + n);
  yc.insert(yc.end(), pending_con_means_.begin(), pending_con_means_.end());

  return {obj_base_->condition(xc, yf), con_base_->condition(xc, yc)};
}

std::vector<double> nei(const GpModel& objective, const GpModel& constraint,
                        const Matrix& xq_encoded, const AcqConfig& cfg) {
  FantasyEnsemble ens(objective, constraint, Matrix(), cfg.fantasy_count,
                      derive_seed(cfg.seed, 0xFA));
  return ens.evaluate(xq_encoded);
}

namespace {

// Greedy coordinate pattern search within [0,1]^d with step halving.
void pattern_search(const FantasyEnsemble& ens, std::vector<double>& u, double& value,
                    std::size_t d) {
  for (double step = 0.1; step >= 1e-4; step *= 0.5) {
    for (int moves = 0; moves < 50; ++moves) {
      Matrix probes;
      for (std::size_t kdim = 0; kdim < d; ++kdim) {
        for (const double sgn : {+1.0, -1.0}) {
          std::vector<double> p = u;
          p[kdim] = std::min(std::max(p[kdim] + sgn * step, 0.0), 1.0);
          probes.append_row(p);
        }
      }
      const auto vals = ens.evaluate(probes);
      std::size_t best = 0;
      for (std::size_t j = 1; j < vals.size(); ++j)
        if (vals[j] > vals[best]) best = j;
      if (vals[best] <= value) break;
      value = vals[best];
      for (std::size_t kdim = 0; kdim < d; ++kdim) u[kdim] = probes(best, kdim);
    }
  }
}

}  // namespace

Candidate propose(const GpModel& objective, const GpModel& constraint,
                  const ParamSpace& space, const std::vector<Candidate>& pending,
                  const AcqConfig& cfg) {
  if (objective.size() == 0)
    throw std::invalid_argument("propose: needs at least one completed observation");
  if (space.dimension() != objective.dimension())
    throw std::invalid_argument("propose: space dimension mismatch");
  const std::size_t d = space.dimension();

  Matrix pend(0, d);
  for (const auto& c : pending) pend.append_row(encode(c, space));

  FantasyEnsemble ens(objective, constraint, pend, cfg.fantasy_count,
                      derive_seed(cfg.seed, 0xFA));

  const std::size_t raw = std::max(cfg.raw_samples, cfg.restarts);
  LowDiscSequence seq(d, derive_seed(cfg.seed, 0x5EEDULL));
  Matrix xraw(raw, d);
  for (std::size_t i = 0; i < raw; ++i) seq.next(xraw.row(i));
  const auto raw_vals = ens.evaluate(xraw);

  std::vector<std::size_t> order(raw);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return raw_vals[a] > raw_vals[b]; });

  std::vector<double> best_u(xraw.row(order[0]), xraw.row(order[0]) + d);
  double best_val = raw_vals[order[0]];
  const std::size_t starts = std::min(cfg.restarts, raw);
  for (std::size_t s = 0; s < starts; ++s) {
    std::vector<double> u(xraw.row(order[s]), xraw.row(order[s]) + d);
    double val = raw_vals[order[s]];
    pattern_search(ens, u, val, d);
    if (val > best_val) {
      best_val = val;
      best_u = u;
    }
  }
  return decode(best_u, space);
}

}  // namespace nebo
