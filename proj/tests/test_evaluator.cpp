#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "nebo/evaluator.hpp"
#include "nebo/rng.hpp"
#include "support/oracles.hpp"

using namespace nebo;

TEST_CASE("mv objective") {
  CHECK(mv_objective({{1, {0.0, 0.0}}, {2, {0.0}}}, 3) == 1.0);
  CHECK(mv_objective({{1, {0.3, 0.3}}, {2, {0.3, 0.3}}}, 4) == doctest::Approx(0.7).epsilon(1e-15));

  // 5 folds with mixed counts against a flatten-and-average oracle
  Rng rng(1);
  for (int t = 0; t < 25; ++t) {
    std::vector<FoldEvaluation> folds;
    std::vector<double> flat;
    for (int f = 1; f <= 5; ++f) {
      FoldEvaluation fe{f, {}};
      const int items = 1 + static_cast<int>(rng.uniform() * 6);
      for (int i = 0; i < items; ++i) {
        fe.per_item_losses.push_back(rng.uniform(0.0, 1.2));
        flat.push_back(fe.per_item_losses.back());
      }
      folds.push_back(std::move(fe));
    }
    double mean = 0.0;
    for (const double v : flat) mean += v;
    mean /= flat.size();
    CHECK(mv_objective(folds, flat.size()) == doctest::Approx(1.0 - mean).epsilon(1e-12));
  }

  CHECK_THROWS(mv_objective({{1, {0.1}}}, 2));   // count mismatch
  CHECK_THROWS(mv_objective({}, 0));             // empty
  CHECK_THROWS(mv_objective({{7, {0.1}}}, 1));   // fold index out of range

  // strictly decreasing in any single loss
  const double base = mv_objective({{1, {0.5, 0.2}}}, 2);
  CHECK(mv_objective({{1, {0.6, 0.2}}}, 2) < base);
}

TEST_CASE("branin values and symmetry of the three minima") {
  const double pi = 3.14159265358979323846;
  CHECK(branin(pi, 2.275) == doctest::Approx(0.397887).epsilon(1e-5));
  CHECK(branin(-pi, 12.275) == doctest::Approx(branin(pi, 2.275)).epsilon(1e-7));
  CHECK(branin(9.42478, 2.475) == doctest::Approx(branin(pi, 2.275)).epsilon(1e-5));
  CHECK_THROWS(branin(-6.0, 0.0));
  CHECK_THROWS(branin(0.0, 16.0));
}

TEST_CASE("hartmann6 known optimum") {
  const std::vector<double> xstar{0.20169, 0.150011, 0.476874,
                                  0.275332, 0.311652, 0.6573};
  CHECK(hartmann6(xstar) == doctest::Approx(-3.32237).epsilon(1e-4));
  CHECK_THROWS(hartmann6(std::vector<double>{0.5, 0.5}));
  CHECK_THROWS(hartmann6(std::vector<double>{0, 0, 0, 0, 0, 1.5}));
}

TEST_CASE("benchmark minima located by the independent grid oracle") {
  const auto bm = oracle::grid_minimum({{-5.0, 10.0}, {0.0, 15.0}}, 101,
                                       oracle::branin_wrapper);
  CHECK(bm.value == doctest::Approx(0.397887).epsilon(1e-4));

  const auto hm = oracle::grid_minimum(
      std::vector<std::pair<double, double>>(6, {0.0, 1.0}), 7,
      oracle::hartmann6_wrapper);
  CHECK(hm.value == doctest::Approx(-3.32237).epsilon(1e-4));
}

TEST_CASE("observe negates benchmarks and reports the constraint") {
  EvaluatorHandle h;
  h.kind = EvaluatorKind::Branin;
  h.noise_sd = 0.0;
  h.gpu_budget = 20.0;
  Candidate c;
  c.values["x1"] = 3.14159265358979323846;
  c.values["x2"] = 2.275;
  const auto obs = observe(h, c, 3, 5);
  CHECK(obs.y == doctest::Approx(-0.397887).epsilon(1e-5));
  CHECK(obs.y_var == 0.0);  // no noise with replicates > 1
  CHECK(obs.c == doctest::Approx((c.values["x1"] - 20.0) / 20.0).epsilon(1e-12));
  CHECK(obs.c_var == doctest::Approx(1e-6));

  // out-of-domain candidates are rejected
  Candidate bad;
  bad.values["x1"] = 50.0;
  bad.values["x2"] = 2.0;
  CHECK_THROWS(observe(h, bad, 1, 5));
}

TEST_CASE("observe variance scales with replicates") {
  EvaluatorHandle h;
  h.kind = EvaluatorKind::Branin;
  h.noise_sd = 1.0;
  Candidate c;
  c.values["x1"] = 0.0;
  c.values["x2"] = 5.0;

  // single replicate falls back to noise_sd^2
  CHECK(observe(h, c, 1, 3).y_var == doctest::Approx(1.0));

  // across 200 trials, mean y_var at r replicates ~ noise_sd^2 / r
  for (const std::size_t r : {4u, 16u}) {
    double mean_var = 0.0;
    for (std::uint64_t s = 0; s < 200; ++s) mean_var += observe(h, c, r, 1000 + s).y_var;
    mean_var /= 200.0;
    const double want = 1.0 / static_cast<double>(r);
    // spread of the mean of 200 scaled chi-squares
    const double se = want * std::sqrt(2.0 / (static_cast<double>(r) - 1.0) / 200.0);
    CHECK(std::abs(mean_var - want) < 3.0 * se);
  }

  // determinism
  const auto a = observe(h, c, 7, 99);
  const auto b = observe(h, c, 7, 99);
  CHECK(a.y == b.y);
  CHECK(a.y_var == b.y_var);
}

TEST_CASE("simulated trainer surface hits its configured peaks") {
  const auto surf = SimulatedSurface::builtin();
  const auto& space = surf->space();

  const auto ap2 = camus_ap2_candidate();
  CHECK(surf->value_at(ap2) == doctest::Approx(0.90).epsilon(1e-9));

  const auto pub = clamped(camus_published_candidate(), space);
  CHECK(surf->value_at(pub) == doctest::Approx(0.84).epsilon(1e-9));

  // the optimal column scores strictly higher than the published one
  CHECK(surf->value_at(ap2) > surf->value_at(pub));
}

TEST_CASE("simulated trainer determinism and noise") {
  const auto surf = SimulatedSurface::builtin();
  const auto ap2 = camus_ap2_candidate();
  const auto [v1, g1] = simulated_trainer(*surf, ap2, 0.02, 77);
  const auto [v2, g2] = simulated_trainer(*surf, ap2, 0.02, 77);
  CHECK(v1 == v2);
  CHECK(g1 == g2);
  const auto [v3, g3] = simulated_trainer(*surf, ap2, 0.0, 12);
  CHECK(v3 == doctest::Approx(0.90).epsilon(1e-9));
  CHECK(g3 == g1);  // usage is noiseless
}

TEST_CASE("gpu usage is monotone in every filter count") {
  const auto surf = SimulatedSurface::builtin();
  auto c = camus_ap2_candidate();
  const double base = surf->gpu_units(c);
  for (const char* name : {"n_filter_1", "n_filter_2", "n_filter_3", "n_filter_4",
                           "n_filter_5"}) {
    auto c2 = c;
    c2.values[name] += 1.0;
    CHECK(surf->gpu_units(c2) > base);
  }
}

TEST_CASE("published candidate sits at 80 percent of the default budget") {
  const auto surf = SimulatedSurface::builtin();
  const double usage = surf->gpu_units(camus_published_candidate());
  CHECK(usage / surf->default_budget() == doctest::Approx(0.8).epsilon(1e-9));

  // the optimal candidates stay within budget (c <= 0)
  EvaluatorHandle h;
  h.kind = EvaluatorKind::SimulatedTrainer;
  h.surface = surf;
  h.gpu_budget = surf->default_budget();
  CHECK(observe(h, camus_ap2_candidate(), 1, 1).c <= 0.0);
  CHECK(observe(h, camus_ap4_candidate(), 1, 1).c <= 0.0);
}

TEST_CASE("evaluator handles round trip through json") {
  EvaluatorHandle h;
  h.kind = EvaluatorKind::SimulatedTrainer;
  h.noise_sd = 0.02;
  h.surface = SimulatedSurface::builtin();
  h.gpu_budget = h.surface->default_budget();
  const auto h2 = EvaluatorHandle::from_json_string(h.to_json_string());
  CHECK(h2.kind == EvaluatorKind::SimulatedTrainer);
  CHECK(h2.noise_sd == h.noise_sd);
  CHECK(h2.gpu_budget == h.gpu_budget);
  const auto ap2 = camus_ap2_candidate();
  CHECK(h2.surface->value_at(ap2) == h.surface->value_at(ap2));
}

TEST_CASE("the shipped surface config matches the builtin") {
  const auto path = std::string(NEBO_SOURCE_DIR) + "/configs/sim_trainer.conf";
  const auto loaded = SimulatedSurface::load(path);
  const auto ap2 = camus_ap2_candidate();
  CHECK(loaded.value_at(ap2) == SimulatedSurface::builtin()->value_at(ap2));
  CHECK(loaded.default_budget() == SimulatedSurface::builtin()->default_budget());
}
