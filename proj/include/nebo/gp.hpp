#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "nebo/linalg.hpp"

namespace nebo {

// Raised when the (noisy) covariance cannot be factorized even after the
// jitter ladder is exhausted, or when conditioning would make it so.
struct SingularModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct KernelParams {
  double signal_variance = 1.0;
  std::vector<double> lengthscales;  // ARD, one per input dimension
  double constant_mean = 0.0;        // in standardized target units
};

// Matern 5/2 with ARD lengthscales.
double matern52(std::span<const double> a, std::span<const double> b,
                const KernelParams& k);

enum class NoiseKind { Inferred, Fixed, Heteroskedastic };

class GpModel;

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Inferred;
  // learned homoskedastic variance, standardized units (Inferred, after fit)
  double inferred_variance = 1e-2;
  // per-point variances in raw target units (Fixed)
  std::vector<double> fixed_variances;
  // inner GP over the log of the standardized noise variance (Heteroskedastic)
  std::shared_ptr<const GpModel> noise_model;

  static NoiseSpec inferred() { return {}; }
  static NoiseSpec fixed(std::vector<double> variances);
};

struct PosteriorDistribution {
  std::vector<double> mean;
  Matrix covariance;
};

// Exact GP regression with a Matern 5/2 ARD kernel and a constant mean.
// Targets are standardized internally and de-standardized on output; all
// posterior quantities describe the latent function (observation noise
// excluded). Models are immutable once constructed.
class GpModel {
 public:
  // Maximizes the log marginal likelihood by multi-restart projected gradient
  // ascent in log-hyperparameter space. Deterministic for a fixed seed.
  static GpModel fit(const Matrix& X, std::span<const double> y, NoiseSpec noise,
                     std::uint64_t seed);

  // Wraps an inner GP fitted to log(var_y + floor) over the same inputs; the
  // outer model uses the inner posterior mean as per-point noise.
  static GpModel fit_heteroskedastic(const Matrix& X, std::span<const double> y,
                                     std::span<const double> var_y, std::uint64_t seed);

  PosteriorDistribution posterior(const Matrix& Xq) const;
  void posterior_diag(const Matrix& Xq, std::vector<double>& mean,
                      std::vector<double>& var) const;
  double posterior_mean_at(std::span<const double> x) const;

  // count draws from the joint posterior at Xq; rows are draws.
  Matrix sample_joint(const Matrix& Xq, std::size_t count, std::uint64_t seed) const;

  // Training set extended by (Xf, yf) at zero observation noise with kernel
  // hyperparameters unchanged. Rows that duplicate an existing noiseless row
  // with an agreeing value are skipped; a conflicting value is an error.
  GpModel condition(const Matrix& Xf, std::span<const double> yf) const;

  double log_marginal_likelihood() const { return mll_; }

  const Matrix& inputs() const { return x_; }
  std::span<const double> targets() const { return y_raw_; }
  const KernelParams& kernel() const { return kernel_; }
  const NoiseSpec& noise() const { return noise_; }
  std::size_t size() const { return x_.rows(); }
  std::size_t dimension() const { return x_.cols(); }

  double target_shift() const { return y_shift_; }
  double target_scale() const { return y_scale_; }
  double signal_variance_raw() const {
    return kernel_.signal_variance * y_scale_ * y_scale_;
  }
  double constant_mean_raw() const {
    return y_shift_ + y_scale_ * kernel_.constant_mean;
  }

  // Observation-noise variance the model would assign at x, raw units.
  double predicted_noise_variance(std::span<const double> x) const;

  double jitter() const { return jitter_; }
  const Matrix& cholesky() const { return chol_; }

  // Internal-representation accessors used by the acquisition fast path.
  std::span<const double> targets_standardized() const { return y_std_; }
  std::span<const double> point_noise_standardized() const { return point_noise_std_; }
  std::span<const double> inputs_transposed() const { return xt_; }

 private:
  GpModel() = default;
  void refactorize();  // builds chol_/alpha_/mll_ from the rest

  Matrix x_;
  std::vector<double> xt_;  // d x n transposed copy for the kernels module
  std::vector<double> y_raw_, y_std_;
  double y_shift_ = 0.0, y_scale_ = 1.0;
  KernelParams kernel_;
  NoiseSpec noise_;
  std::vector<double> point_noise_std_;  // effective per-point variance, standardized
  Matrix chol_;
  std::vector<double> alpha_;
  double jitter_ = 0.0;
  double mll_ = 0.0;
};

}  // namespace nebo
