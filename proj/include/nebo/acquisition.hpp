#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "nebo/gp.hpp"
#include "nebo/linalg.hpp"
#include "nebo/param_space.hpp"

namespace nebo {

struct AcqConfig {
  std::size_t fantasy_count = 64;
  std::size_t restarts = 10;
  std::size_t raw_samples = 512;
  std::uint64_t seed = 0;
};

// Closed-form EI of a Gaussian with the given mean/std over `best`.
double expected_improvement(double mean, double std_dev, double best);

// The feasibility-discounted objective f * (1 - sigmoid(c)).
double weighted_objective(double objective_value, double constraint_value);

// k paired objective/constraint models conditioned noiselessly on sampled
// instances of the latent values at the observed (and pending) locations.
//
// All pairs share the same augmented input set and frozen kernel
// hyperparameters, so the ensemble keeps a single Cholesky factor per channel
// and one weight column per fantasy; pair(i) materializes the equivalent pair
// of conditioned GpModels for verification.
class FantasyEnsemble {
 public:
  FantasyEnsemble(const GpModel& objective, const GpModel& constraint,
                  const Matrix& pending_encoded, std::size_t count, std::uint64_t seed);

  std::size_t size() const { return count_; }
  double incumbent(std::size_t i) const { return incumbent_[i]; }

  // Mean over pairs of the EI of the weighted objective at each query row.
  std::vector<double> evaluate(const Matrix& xq_encoded) const;

  std::pair<GpModel, GpModel> pair(std::size_t i) const;

 private:
  struct Channel {
    Matrix x_aug;
    std::vector<double> xt;
    KernelParams kernel;
    double y_shift = 0.0, y_scale = 1.0;
    Matrix chol;
    Matrix w;  // n_aug x count, solved weight columns (standardized)
  };

  Channel build_channel(const GpModel& base, const Matrix& samples,
                        const Matrix& pending, const std::vector<double>& pending_means) const;

  std::size_t count_ = 0;
  const GpModel* obj_base_;
  const GpModel* con_base_;
  Matrix pending_;
  Matrix obj_samples_, con_samples_;  // count x n, snapped at noiseless rows
  std::vector<double> pending_obj_means_, pending_con_means_;
  std::vector<double> incumbent_;
  Channel obj_, con_;
};

// Noisy Expected Improvement of the weighted objective at the query rows,
// averaged over cfg.fantasy_count fantasy pairs. Deterministic per cfg.seed.
std::vector<double> nei(const GpModel& objective, const GpModel& constraint,
                        const Matrix& xq_encoded, const AcqConfig& cfg);

// Maximizes NEI over the unit cube: low-discrepancy seeding plus pattern
// search refinement of the best starts. Pending candidates are folded into
// the fantasies at their posterior means. Returns a decoded valid candidate.
Candidate propose(const GpModel& objective, const GpModel& constraint,
                  const ParamSpace& space, const std::vector<Candidate>& pending,
                  const AcqConfig& cfg);

}  // namespace nebo
