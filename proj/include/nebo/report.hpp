#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nebo/orchestrator.hpp"
#include "nebo/trial.hpp"

namespace nebo {

struct TracePoint {
  std::size_t trial_index = 0;   // completion order
  std::uint64_t trial_id = 0;
  bool has_value = false;        // false until the first feasible completion
  double best_so_far = 0.0;
};

// Cumulative best feasible observed value in completion order.
std::vector<TracePoint> convergence_trace(const std::vector<TrialRecord>& history);

std::string trace_to_csv(const std::vector<TracePoint>& trace);

struct BenchmarkSuite {
  RunConfig run;        // template; master_seed is replaced per seed
  std::string out_dir;  // where report files land

  static BenchmarkSuite load(const std::string& path);
  static BenchmarkSuite from_json_string(const std::string& text);
};

struct BenchmarkReport {
  std::vector<std::uint64_t> seeds;
  // [seed][completion index], NaN before the first feasible completion
  std::vector<std::vector<double>> bo_best, random_best;
  // noiseless objective value of the returned best-feasible candidate
  std::vector<double> bo_final, random_final;
  double wilcoxon_p = 1.0;
};

// For each seed: one BO run and one random-search run with identical budgets
// and identical per-trial evaluator seeds. Trajectories are observed values;
// finals are noiseless re-evaluations of the best feasible candidates.
BenchmarkReport run_benchmark(const BenchmarkSuite& suite,
                              const std::vector<std::uint64_t>& seeds);

// Deterministic report files: bo_trajectories.csv, random_trajectories.csv,
// summary.csv (median/IQR per index per method) and report.json.
void write_benchmark_files(const BenchmarkReport& report, const std::string& out_dir);

// Uniform random-search baseline over the same space and budget; trial i uses
// the same evaluator seed the BO run would use.
std::vector<TrialRecord> random_search(const RunConfig& cfg);

}  // namespace nebo
