#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nebo/report.hpp"
#include "nebo/rng.hpp"

using namespace nebo;

namespace {

TrialRecord completed(std::uint64_t id, double y, double c, std::int64_t order) {
  TrialRecord r;
  r.trial_id = id;
  r.state = TrialState::Completed;
  r.observation = Observation{y, 0.0, c, 0.0};
  r.completion_index = order;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig tiny_bench_config() {
  RunConfig cfg;
  cfg.evaluator.kind = EvaluatorKind::Branin;
  cfg.evaluator.noise_sd = 0.0;
  cfg.evaluator.gpu_budget = 20.0;
  cfg.space = branin_space();
  cfg.budget = 10;
  cfg.n_init = 6;
  cfg.acq = {8, 3, 64, 0};
  cfg.max_in_flight = 1;
  return cfg;
}

}  // namespace

TEST_CASE("convergence trace basics") {
  CHECK(convergence_trace({}).empty());

  std::vector<TrialRecord> hist;
  hist.push_back(completed(0, 1.0, 2.0, 0));
  hist.push_back(completed(1, 2.0, 1.0, 1));
  auto trace = convergence_trace(hist);
  REQUIRE(trace.size() == 2);
  CHECK(!trace[0].has_value);
  CHECK(!trace[1].has_value);

  hist.clear();
  hist.push_back(completed(0, 1.0, 1.0, 0));   // infeasible
  hist.push_back(completed(1, 5.0, -1.0, 1));  // feasible
  hist.push_back(completed(2, 3.0, -1.0, 2));  // feasible but worse
  hist.push_back(completed(3, 8.0, -0.5, 3));
  TrialRecord failed;
  failed.trial_id = 4;
  failed.state = TrialState::Failed;
  hist.push_back(failed);
  trace = convergence_trace(hist);
  REQUIRE(trace.size() == 4);
  CHECK(!trace[0].has_value);
  CHECK(trace[1].best_so_far == 5.0);
  CHECK(trace[2].best_so_far == 5.0);
  CHECK(trace[3].best_so_far == 8.0);
}

TEST_CASE("trace is the prefix max of feasible completions") {
  Rng rng(1);
  std::vector<TrialRecord> hist;
  for (int i = 0; i < 25; ++i)
    hist.push_back(completed(i, rng.uniform(-3, 3), rng.uniform(-1, 1), i));
  const auto trace = convergence_trace(hist);

  // independent prefix-scan oracle
  bool have = false;
  double best = 0.0;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const auto& o = *hist[i].observation;
    if (o.c <= 0.0 && (!have || o.y > best)) {
      best = o.y;
      have = true;
    }
    CHECK(trace[i].has_value == have);
    if (have) CHECK(trace[i].best_so_far == best);
  }

  // non-decreasing wherever defined
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i - 1].has_value) CHECK(trace[i].best_so_far >= trace[i - 1].best_so_far);
}

TEST_CASE("trace respects completion order, not trial id order") {
  std::vector<TrialRecord> hist;
  hist.push_back(completed(0, 9.0, -1.0, 2));  // completed last
  hist.push_back(completed(1, 1.0, -1.0, 0));  // completed first
  hist.push_back(completed(2, 4.0, -1.0, 1));
  const auto trace = convergence_trace(hist);
  CHECK(trace[0].trial_id == 1);
  CHECK(trace[0].best_so_far == 1.0);
  CHECK(trace[1].best_so_far == 4.0);
  CHECK(trace[2].best_so_far == 9.0);
}

TEST_CASE("trace csv marks missing values") {
  std::vector<TrialRecord> hist;
  hist.push_back(completed(0, 1.0, 1.0, 0));
  hist.push_back(completed(1, 2.5, -1.0, 1));
  const auto csv = trace_to_csv(convergence_trace(hist));
  CHECK(csv.find("trial_index,trial_id,best_feasible_so_far\n") == 0);
  CHECK(csv.find("0,0,NA") != std::string::npos);
  CHECK(csv.find("1,1,2.5") != std::string::npos);
}

TEST_CASE("random search is deterministic and valid") {
  RunConfig cfg = tiny_bench_config();
  cfg.master_seed = 5;
  const auto a = random_search(cfg);
  const auto b = random_search(cfg);
  REQUIRE(a.size() == cfg.budget);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].candidate == b[i].candidate);
    CHECK(validate(a[i].candidate, cfg.space).empty());
    CHECK(a[i].observation->y == b[i].observation->y);
  }
}

TEST_CASE("benchmark runs produce deterministic reports and sane structure") {
  BenchmarkSuite suite;
  suite.run = tiny_bench_config();
  const auto out1 = std::filesystem::temp_directory_path() / "nebo_bench_a";
  const auto out2 = std::filesystem::temp_directory_path() / "nebo_bench_b";
  std::filesystem::remove_all(out1);
  std::filesystem::remove_all(out2);

  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  suite.out_dir = out1.string();
  const auto rep1 = run_benchmark(suite, seeds);
  write_benchmark_files(rep1, out1.string());
  suite.out_dir = out2.string();
  const auto rep2 = run_benchmark(suite, seeds);
  write_benchmark_files(rep2, out2.string());

  CHECK(rep1.wilcoxon_p == rep2.wilcoxon_p);
  for (const char* f : {"bo_trajectories.csv", "random_trajectories.csv", "summary.csv",
                        "report.json"}) {
    CAPTURE(f);
    CHECK(slurp(out1 / f) == slurp(out2 / f));
    CHECK(!slurp(out1 / f).empty());
  }

  REQUIRE(rep1.bo_best.size() == seeds.size());
  REQUIRE(rep1.random_best.size() == seeds.size());
  for (const auto& traj : rep1.bo_best) {
    CHECK(traj.size() == suite.run.budget);
    // monotone non-decreasing where defined
    for (std::size_t i = 1; i < traj.size(); ++i)
      if (!std::isnan(traj[i - 1])) CHECK(traj[i] >= traj[i - 1]);
  }
  CHECK(rep1.wilcoxon_p >= 0.0);
  CHECK(rep1.wilcoxon_p <= 1.0);

  std::filesystem::remove_all(out1);
  std::filesystem::remove_all(out2);
}

TEST_CASE("benchmark rejects fewer than five seeds") {
  BenchmarkSuite suite;
  suite.run = tiny_bench_config();
  suite.out_dir.clear();
  CHECK_THROWS(run_benchmark(suite, {1, 2, 3}));
}
