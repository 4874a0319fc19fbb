#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nebo/param_space.hpp"

namespace nebo {

// One noisy measurement of a candidate: objective value with its variance
// estimate and a constraint value (feasible iff c <= 0) with its variance.
struct Observation {
  double y = 0.0;
  double y_var = 0.0;
  double c = 0.0;
  double c_var = 0.0;
};

struct FoldEvaluation {
  int fold_index = 1;  // 1..5
  std::vector<double> per_item_losses;
};

// 1 - (grand sum of losses) / total_count, the inverted mean test loss over
// all cross-validation folds.
double mv_objective(const std::vector<FoldEvaluation>& folds, std::size_t total_count);

// Standard benchmark surfaces; the engine maximizes their negation.
double branin(double x1, double x2);                  // domain [-5,10] x [0,15]
double hartmann6(std::span<const double> x);          // domain [0,1]^6

const ParamSpace& branin_space();
const ParamSpace& hartmann6_space();
const ParamSpace& camus_unet_space();

// Table-of-hyperparameters reference candidates. The previously published
// configuration keeps its out-of-range fields verbatim (validate flags them);
// clamped() projects them onto the space.
Candidate camus_published_candidate();
Candidate camus_ap2_candidate();
Candidate camus_ap4_candidate();
Candidate clamped(const Candidate& c, const ParamSpace& s);

// Smooth deterministic stand-in for the real trainer: a sum of anisotropic
// Gaussian bumps anchored at configured candidates plus a mild quadratic
// bowl, with an affine GPU-usage model. Bump heights are solved at load so
// the surface passes exactly through the configured peak values.
class SimulatedSurface {
 public:
  static SimulatedSurface load(const std::string& path);
  static SimulatedSurface from_json_string(const std::string& text);
  static std::shared_ptr<const SimulatedSurface> builtin();  // the shipped config
  std::string to_json_string() const;

  const ParamSpace& space() const { return space_; }
  double value_at_encoded(std::span<const double> u) const;  // noiseless
  double value_at(const Candidate& c) const;
  double gpu_units(const Candidate& c) const;
  double default_budget() const { return default_budget_; }
  double peak_value(std::size_t bump) const { return bumps_[bump].peak_value; }

 private:
  struct Bump {
    std::vector<double> center;  // encoded
    std::vector<double> width;   // encoded units, per dimension
    double peak_value = 0.0;     // configured surface value at the center
    double height = 0.0;         // solved coefficient
  };

  void solve_heights();
  double bowl_at(std::span<const double> u) const;

  ParamSpace space_;
  std::string source_json_;
  std::vector<Bump> bumps_;
  std::size_t bowl_bump_ = 0;
  double bowl_coefficient_ = 0.0;
  std::vector<std::string> filter_params_;
  std::string batch_param_;
  double gpu_base_ = 0.0, gpu_per_filter_ = 1.0, gpu_per_batch_ = 0.0;
  double default_budget_ = 1.0;
};

enum class EvaluatorKind { Branin, Hartmann6, SimulatedTrainer, ExternalWorker };

std::string to_string(EvaluatorKind k);
EvaluatorKind evaluator_kind_from_string(const std::string& s);

struct EvaluatorHandle {
  EvaluatorKind kind = EvaluatorKind::Branin;
  double noise_sd = 0.0;
  double gpu_budget = 20.0;
  double constraint_noise_var = 1e-6;
  std::shared_ptr<const SimulatedSurface> surface;  // SimulatedTrainer only

  const ParamSpace& space() const;
  std::string to_json_string() const;
  static EvaluatorHandle from_json_string(const std::string& text);
};

// The simulated-trainer measurement: noisy surface value and exact gpu usage.
std::pair<double, double> simulated_trainer(const SimulatedSurface& surface,
                                            const Candidate& c, double noise_sd,
                                            std::uint64_t seed);

// Evaluates the handle's function `replicates` times with independent noise
// draws; y is the sample mean and y_var the squared standard error (for a
// single replicate, the handle's noise_sd^2). Deterministic per seed.
Observation observe(const EvaluatorHandle& h, const Candidate& c,
                    std::size_t replicates, std::uint64_t seed);

// Noiseless objective value of the handle at c (for reporting).
double true_value(const EvaluatorHandle& h, const Candidate& c);

}  // namespace nebo
