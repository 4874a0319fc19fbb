#include "nebo/evaluator.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nebo/rng.hpp"

namespace nebo {

double mv_objective(const std::vector<FoldEvaluation>& folds, std::size_t total_count) {
  if (total_count == 0) throw std::invalid_argument("mv_objective: total count must be >= 1");
  double sum = 0.0;
  std::size_t items = 0;
  for (const auto& f : folds) {
    if (f.fold_index < 1 || f.fold_index > 5)
      throw std::invalid_argument("mv_objective: fold index out of range");
    for (double loss : f.per_item_losses) {
      if (!std::isfinite(loss)) throw std::invalid_argument("mv_objective: loss not finite");
      sum += loss;
      ++items;
    }
  }
  if (items != total_count)
    throw std::invalid_argument("mv_objective: total count does not match supplied items");
  return 1.0 - sum / static_cast<double>(total_count);
}

double branin(double x1, double x2) {
  if (x1 < -5.0 || x1 > 10.0 || x2 < 0.0 || x2 > 15.0)
    throw std::domain_error("branin: input outside [-5,10] x [0,15]");
  constexpr double a = 1.0;
  const double b = 5.1 / (4.0 * std::numbers::pi * std::numbers::pi);
  const double c = 5.0 / std::numbers::pi;
  constexpr double r = 6.0;
  constexpr double s = 10.0;
  const double t = 1.0 / (8.0 * std::numbers::pi);
  const double inner = x2 - b * x1 * x1 + c * x1 - r;
  return a * inner * inner + s * (1.0 - t) * std::cos(x1) + s;
}

double hartmann6(std::span<const double> x) {
  if (x.size() != 6) throw std::domain_error("hartmann6: input must have 6 components");
  for (double v : x)
    if (v < 0.0 || v > 1.0) throw std::domain_error("hartmann6: input outside [0,1]^6");
  static constexpr double alpha[4] = {1.0, 1.2, 3.0, 3.2};
  static constexpr double A[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                     {0.05, 10, 17, 0.1, 8, 14},
                                     {3, 3.5, 1.7, 10, 17, 8},
                                     {17, 8, 0.05, 10, 0.1, 14}};
  static constexpr double P[4][6] = {
      {0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
      {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
      {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
      {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
  double outer = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (int j = 0; j < 6; ++j) {
      const double diff = x[j] - P[i][j];
      inner += A[i][j] * diff * diff;
    }
    outer += alpha[i] * std::exp(-inner);
  }
  return -outer;
}

const ParamSpace& branin_space() {
  static const ParamSpace s({{"x1", ParamKind::Continuous, -5.0, 10.0, ""},
                             {"x2", ParamKind::Continuous, 0.0, 15.0, ""}});
  return s;
}

const ParamSpace& hartmann6_space() {
  static const ParamSpace s = [] {
    std::vector<ParamSpec> specs;
    for (int i = 1; i <= 6; ++i)
      specs.push_back({"x" + std::to_string(i), ParamKind::Continuous, 0.0, 1.0, ""});
    return ParamSpace(specs);
  }();
  return s;
}

const ParamSpace& camus_unet_space() {
  static const ParamSpace s({
      {"n_filter_1", ParamKind::Integer, 16, 32, "output filters, block 1"},
      {"n_filter_2", ParamKind::Integer, 57, 128, "output filters, block 2"},
      {"n_filter_3", ParamKind::Integer, 153, 256, "output filters, block 3"},
      {"n_filter_4", ParamKind::Integer, 281, 512, "output filters, block 4"},
      {"n_filter_5", ParamKind::Integer, 537, 1024, "output filters, block 5"},
      {"group_vs_batch", ParamKind::Binary, 0, 1, "1 = group norm, 0 = batch norm"},
      {"num_groups", ParamKind::Integer, 2, 24, "groups when group norm is chosen"},
      {"lg_learning_rate", ParamKind::Continuous, -9, 2, "log10 of learning rate"},
      {"lg_weight_decay", ParamKind::Continuous, -9, -2, "log10 of weight decay"},
      {"batch_size", ParamKind::Integer, 2, 10, ""},
  });
  return s;
}

Candidate camus_published_candidate() {
  return Candidate{{{"n_filter_1", 32},
                    {"n_filter_2", 64},
                    {"n_filter_3", 128},
                    {"n_filter_4", 256},
                    {"n_filter_5", 512},
                    {"group_vs_batch", 0},
                    {"num_groups", 16},
                    {"lg_learning_rate", -6.22},
                    {"lg_weight_decay", -13.8},
                    {"batch_size", 16}}};
}

Candidate camus_ap2_candidate() {
  // num_groups is unreported for this candidate; the published value stands in
  return Candidate{{{"n_filter_1", 21},
                    {"n_filter_2", 94},
                    {"n_filter_3", 225},
                    {"n_filter_4", 427},
                    {"n_filter_5", 811},
                    {"group_vs_batch", 1},
                    {"num_groups", 16},
                    {"lg_learning_rate", -8.0},
                    {"lg_weight_decay", -7.9},
                    {"batch_size", 7}}};
}

Candidate camus_ap4_candidate() {
  return Candidate{{{"n_filter_1", 19},
                    {"n_filter_2", 77},
                    {"n_filter_3", 157},
                    {"n_filter_4", 490},
                    {"n_filter_5", 915},
                    {"group_vs_batch", 1},
                    {"num_groups", 16},
                    {"lg_learning_rate", -7.6},
                    {"lg_weight_decay", -8.7},
                    {"batch_size", 6}}};
}

Candidate clamped(const Candidate& c, const ParamSpace& s) {
  Candidate out = c;
  for (const auto& spec : s.specs()) {
    auto it = out.values.find(spec.name);
    if (it == out.values.end()) continue;
    it->second = std::min(std::max(it->second, spec.lower), spec.upper);
  }
  return out;
}

// --- simulated trainer surface ---------------------------------------------

namespace {

// The shipped surface configuration; configs/sim_trainer.conf carries the
// same text and remains the editable interface.
constexpr const char* kBuiltinSurfaceJson = R"({
  "space_builtin": "camus_unet",
  "bumps": [
    {
      "center": {"n_filter_1": 21, "n_filter_2": 94, "n_filter_3": 225,
                 "n_filter_4": 427, "n_filter_5": 811, "group_vs_batch": 1,
                 "num_groups": 16, "lg_learning_rate": -8.0,
                 "lg_weight_decay": -7.9, "batch_size": 7},
      "width": 0.9,
      "width_overrides": {"num_groups": 1.5},
      "peak_value": 0.90
    },
    {
      "center": {"n_filter_1": 32, "n_filter_2": 64, "n_filter_3": 128,
                 "n_filter_4": 256, "n_filter_5": 512, "group_vs_batch": 0,
                 "num_groups": 16, "lg_learning_rate": -6.22,
                 "lg_weight_decay": -13.8, "batch_size": 16},
      "width": 0.8,
      "peak_value": 0.84
    }
  ],
  "bowl": {"bump": 0, "coefficient": 0.15},
  "gpu": {
    "base": 0.0,
    "per_filter": 1.0,
    "per_batch": 30.0,
    "budget": 1840.0,
    "filter_params": ["n_filter_1", "n_filter_2", "n_filter_3", "n_filter_4", "n_filter_5"],
    "batch_param": "batch_size"
  }
})";

}  // namespace

SimulatedSurface SimulatedSurface::from_json_string(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SimulatedSurface s;
  s.source_json_ = j.dump(2);
  if (j.contains("space_builtin")) {
    const auto name = j["space_builtin"].get<std::string>();
    if (name != "camus_unet")
      throw std::invalid_argument("unknown builtin space: " + name);
    s.space_ = camus_unet_space();
  } else {
    s.space_ = ParamSpace::from_json_string(j.at("space").dump());
  }
  const std::size_t d = s.space_.dimension();

  for (const auto& bj : j.at("bumps")) {
    Bump b;
    Candidate center;
    for (const auto& [k, v] : bj.at("center").items()) center.values[k] = v.get<double>();
    b.center = encode(clamped(center, s.space_), s.space_);
    const double w = bj.at("width").get<double>();
    b.width.assign(d, w);
    if (bj.contains("width_overrides")) {
      for (const auto& [k, v] : bj["width_overrides"].items()) {
        for (std::size_t i = 0; i < d; ++i)
          if (s.space_.spec(i).name == k) b.width[i] = v.get<double>();
      }
    }
    b.peak_value = bj.at("peak_value").get<double>();
    s.bumps_.push_back(std::move(b));
  }
  if (s.bumps_.empty()) throw std::invalid_argument("surface needs at least one bump");

  const auto& bowl = j.at("bowl");
  s.bowl_bump_ = bowl.at("bump").get<std::size_t>();
  s.bowl_coefficient_ = bowl.at("coefficient").get<double>();
  if (s.bowl_bump_ >= s.bumps_.size())
    throw std::invalid_argument("bowl references a missing bump");

  const auto& gpu = j.at("gpu");
  s.gpu_base_ = gpu.at("base").get<double>();
  s.gpu_per_filter_ = gpu.at("per_filter").get<double>();
  s.gpu_per_batch_ = gpu.at("per_batch").get<double>();
  s.default_budget_ = gpu.at("budget").get<double>();
  s.filter_params_ = gpu.at("filter_params").get<std::vector<std::string>>();
  s.batch_param_ = gpu.at("batch_param").get<std::string>();

  s.solve_heights();
  return s;
}

SimulatedSurface SimulatedSurface::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open surface config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

std::shared_ptr<const SimulatedSurface> SimulatedSurface::builtin() {
  static const auto s =
      std::make_shared<const SimulatedSurface>(from_json_string(kBuiltinSurfaceJson));
  return s;
}

std::string SimulatedSurface::to_json_string() const { return source_json_; }

double SimulatedSurface::bowl_at(std::span<const double> u) const {
  const auto& z = bumps_[bowl_bump_].center;
  double msd = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) msd += (u[i] - z[i]) * (u[i] - z[i]);
  msd /= static_cast<double>(u.size());
  return -bowl_coefficient_ * msd;
}

void SimulatedSurface::solve_heights() {
  const std::size_t k = bumps_.size();
  // g[j][i] = bump i's gaussian at bump j's center
  std::vector<std::vector<double>> g(k, std::vector<double>(k + 1, 0.0));
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < k; ++i) {
      double r2 = 0.0;
      for (std::size_t t = 0; t < bumps_[i].center.size(); ++t) {
        const double diff = (bumps_[j].center[t] - bumps_[i].center[t]) / bumps_[i].width[t];
        r2 += diff * diff;
      }
      g[j][i] = std::exp(-0.5 * r2);
    }
    g[j][k] = bumps_[j].peak_value - bowl_at(bumps_[j].center);
  }
  // Gaussian elimination with partial pivoting (k is tiny)
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(g[r][col]) > std::abs(g[piv][col])) piv = r;
    std::swap(g[col], g[piv]);
    if (std::abs(g[col][col]) < 1e-12)
      throw std::invalid_argument("surface bumps are degenerate; cannot solve heights");
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = g[r][col] / g[col][col];
      for (std::size_t c = col; c <= k; ++c) g[r][c] -= f * g[col][c];
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    bumps_[i].height = g[i][k] / g[i][i];
    if (!(bumps_[i].height > 0.0))
      throw std::invalid_argument("surface peaks produce a non-positive bump height");
  }
}

double SimulatedSurface::value_at_encoded(std::span<const double> u) const {
  double v = bowl_at(u);
  for (const auto& b : bumps_) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double diff = (u[i] - b.center[i]) / b.width[i];
      r2 += diff * diff;
    }
    v += b.height * std::exp(-0.5 * r2);
  }
  return v;
}

double SimulatedSurface::value_at(const Candidate& c) const {
  return value_at_encoded(encode(c, space_));
}

double SimulatedSurface::gpu_units(const Candidate& c) const {
  double filters = 0.0;
  for (const auto& name : filter_params_) filters += c.values.at(name);
  return gpu_base_ + gpu_per_filter_ * filters + gpu_per_batch_ * c.values.at(batch_param_);
}

std::pair<double, double> simulated_trainer(const SimulatedSurface& surface,
                                            const Candidate& c, double noise_sd,
                                            std::uint64_t seed) {
  if (const auto bad = validate(c, surface.space()); !bad.empty())
    throw std::invalid_argument("simulated_trainer: invalid candidate (" +
                                bad.front().name + ")");
  double v = surface.value_at(c);
  if (noise_sd > 0.0) {
    Rng rng(seed);
    v += noise_sd * rng.normal();
  }
  return {v, surface.gpu_units(c)};
}

// --- handles ----------------------------------------------------------------

std::string to_string(EvaluatorKind k) {
  switch (k) {
    case EvaluatorKind::Branin: return "branin";
    case EvaluatorKind::Hartmann6: return "hartmann6";
    case EvaluatorKind::SimulatedTrainer: return "simulated_trainer";
    case EvaluatorKind::ExternalWorker: return "external_worker";
  }
  return "branin";
}

EvaluatorKind evaluator_kind_from_string(const std::string& s) {
  if (s == "branin") return EvaluatorKind::Branin;
  if (s == "hartmann6") return EvaluatorKind::Hartmann6;
  if (s == "simulated_trainer") return EvaluatorKind::SimulatedTrainer;
  if (s == "external_worker") return EvaluatorKind::ExternalWorker;
  throw std::invalid_argument("unknown evaluator kind: " + s);
}

const ParamSpace& EvaluatorHandle::space() const {
  switch (kind) {
    case EvaluatorKind::Branin: return branin_space();
    case EvaluatorKind::Hartmann6: return hartmann6_space();
    case EvaluatorKind::SimulatedTrainer:
      return surface ? surface->space() : SimulatedSurface::builtin()->space();
    case EvaluatorKind::ExternalWorker:
      throw std::logic_error("external_worker handles carry no built-in space");
  }
  return branin_space();
}

std::string EvaluatorHandle::to_json_string() const {
  nlohmann::json j{{"kind", to_string(kind)},
                   {"noise_sd", noise_sd},
                   {"gpu_budget", gpu_budget},
                   {"constraint_noise_var", constraint_noise_var}};
  if (kind == EvaluatorKind::SimulatedTrainer) {
    const auto& s = surface ? *surface : *SimulatedSurface::builtin();
    j["surface"] = nlohmann::json::parse(s.to_json_string());
  }
  return j.dump();
}

EvaluatorHandle EvaluatorHandle::from_json_string(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  EvaluatorHandle h;
  h.kind = evaluator_kind_from_string(j.at("kind").get<std::string>());
  h.noise_sd = j.value("noise_sd", 0.0);
  h.constraint_noise_var = j.value("constraint_noise_var", 1e-6);
  if (h.kind == EvaluatorKind::SimulatedTrainer) {
    if (j.contains("surface_file"))
      h.surface = std::make_shared<const SimulatedSurface>(
          SimulatedSurface::load(j["surface_file"].get<std::string>()));
    else if (j.contains("surface"))
      h.surface = std::make_shared<const SimulatedSurface>(
          SimulatedSurface::from_json_string(j["surface"].dump()));
    else
      h.surface = SimulatedSurface::builtin();
    h.gpu_budget = j.value("gpu_budget", h.surface->default_budget());
  } else {
    h.gpu_budget = j.value("gpu_budget", 20.0);
  }
  return h;
}

double true_value(const EvaluatorHandle& h, const Candidate& c) {
  switch (h.kind) {
    case EvaluatorKind::Branin:
      return -branin(c.values.at("x1"), c.values.at("x2"));
    case EvaluatorKind::Hartmann6: {
      std::vector<double> x;
      for (const auto& spec : hartmann6_space().specs()) x.push_back(c.values.at(spec.name));
      return -hartmann6(x);
    }
    case EvaluatorKind::SimulatedTrainer: {
      const auto& s = h.surface ? *h.surface : *SimulatedSurface::builtin();
      return s.value_at(c);
    }
    case EvaluatorKind::ExternalWorker:
      throw std::logic_error("external_worker values are not computable in-process");
  }
  return 0.0;
}

Observation observe(const EvaluatorHandle& h, const Candidate& c,
                    std::size_t replicates, std::uint64_t seed) {
  if (replicates == 0) throw std::invalid_argument("observe: replicates must be >= 1");
  if (h.kind == EvaluatorKind::ExternalWorker)
    throw std::logic_error("observe: external_worker evaluations run on workers");
  if (const auto bad = validate(c, h.space()); !bad.empty())
    throw std::invalid_argument("observe: invalid candidate (" + bad.front().name + ": " +
                                bad.front().message + ")");

  double base = 0.0, usage = 0.0;
  switch (h.kind) {
    case EvaluatorKind::Branin:
      base = -branin(c.values.at("x1"), c.values.at("x2"));
      usage = c.values.at("x1");
      break;
    case EvaluatorKind::Hartmann6: {
      std::vector<double> x;
      for (const auto& spec : hartmann6_space().specs()) x.push_back(c.values.at(spec.name));
      base = -hartmann6(x);
      for (double v : x) usage += v;
      break;
    }
    case EvaluatorKind::SimulatedTrainer: {
      const auto& s = h.surface ? *h.surface : *SimulatedSurface::builtin();
      base = s.value_at(c);
      usage = s.gpu_units(c);
      break;
    }
    case EvaluatorKind::ExternalWorker: break;
  }

  Rng rng(seed);
  Observation obs;
  if (replicates == 1) {
    obs.y = base + (h.noise_sd > 0.0 ? h.noise_sd * rng.normal() : 0.0);
    obs.y_var = h.noise_sd * h.noise_sd;
  } else {
    std::vector<double> ys(replicates);
    double mean = 0.0;
    for (auto& v : ys) {
      v = base + (h.noise_sd > 0.0 ? h.noise_sd * rng.normal() : 0.0);
      mean += v;
    }
    mean /= static_cast<double>(replicates);
    double var = 0.0;
    for (double v : ys) var += (v - mean) * (v - mean);
    var /= static_cast<double>(replicates - 1);
    obs.y = mean;
    obs.y_var = var / static_cast<double>(replicates);
  }
  obs.c = (usage - h.gpu_budget) / h.gpu_budget;
  obs.c_var = h.constraint_noise_var;
  return obs;
}

}  // namespace nebo
