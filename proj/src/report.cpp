#include "nebo/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nebo/rng.hpp"
#include "nebo/stats.hpp"

namespace nebo {
namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double quantile(std::vector<double> v, double q) {
  std::erase_if(v, [](double x) { return std::isnan(x); });
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

std::vector<TracePoint> convergence_trace(const std::vector<TrialRecord>& history) {
  std::vector<const TrialRecord*> completed;
  for (const auto& r : history)
    if (r.state == TrialState::Completed && r.observation) completed.push_back(&r);
  std::sort(completed.begin(), completed.end(), [](const auto* a, const auto* b) {
    if (a->completion_index != b->completion_index)
      return a->completion_index < b->completion_index;
    return a->trial_id < b->trial_id;
  });

  std::vector<TracePoint> trace;
  bool have = false;
  double best = 0.0;
  for (std::size_t i = 0; i < completed.size(); ++i) {
    const auto& obs = *completed[i]->observation;
    if (obs.c <= 0.0 && (!have || obs.y > best)) {
      best = obs.y;
      have = true;
    }
    trace.push_back({i, completed[i]->trial_id, have, have ? best : 0.0});
  }
  return trace;
}

std::string trace_to_csv(const std::vector<TracePoint>& trace) {
  std::ostringstream out;
  out << "trial_index,trial_id,best_feasible_so_far\n";
  for (const auto& t : trace) {
    out << t.trial_index << ',' << t.trial_id << ','
        << (t.has_value ? fmt(t.best_so_far) : "NA") << '\n';
  }
  return out.str();
}

BenchmarkSuite BenchmarkSuite::from_json_string(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  BenchmarkSuite s;
  s.run = RunConfig::from_json_string(j.at("run").dump());
  s.out_dir = j.value("out_dir", "bench_out");
  return s;
}

BenchmarkSuite BenchmarkSuite::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open benchmark suite: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

std::vector<TrialRecord> random_search(const RunConfig& cfg) {
  std::vector<TrialRecord> history;
  const std::size_t d = cfg.space.dimension();
  for (std::size_t i = 0; i < cfg.budget; ++i) {
    Rng rng(derive_seed(cfg.master_seed, seed_stream::kRandomSearch, i));
    std::vector<double> u(d);
    for (auto& v : u) v = rng.uniform();
    TrialRecord r;
    r.trial_id = i;
    r.candidate = decode(u, cfg.space);
    r.seed = derive_seed(cfg.master_seed, seed_stream::kTrial, i);
    r.state = TrialState::Completed;
    r.observation = observe(cfg.evaluator, r.candidate, cfg.replicates, r.seed);
    r.completion_index = static_cast<std::int64_t>(i);
    history.push_back(std::move(r));
  }
  return history;
}

namespace {

std::vector<double> best_series(const std::vector<TrialRecord>& history,
                                std::size_t budget) {
  const auto trace = convergence_trace(history);
  std::vector<double> out(budget, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < trace.size() && i < budget; ++i)
    if (trace[i].has_value) out[i] = trace[i].best_so_far;
  return out;
}

double final_true_value(const RunConfig& cfg, const std::vector<TrialRecord>& history) {
  const auto best = best_feasible(history);
  if (!best) return std::numeric_limits<double>::quiet_NaN();
  return true_value(cfg.evaluator, best->first);
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkSuite& suite,
                              const std::vector<std::uint64_t>& seeds) {
  if (seeds.size() < 5)
    throw std::invalid_argument("run_benchmark: needs at least 5 seeds");

  BenchmarkReport rep;
  rep.seeds = seeds;
  for (const auto seed : seeds) {
    RunConfig cfg = suite.run;
    cfg.master_seed = seed;
    cfg.max_in_flight = 1;  // sequential child runs keep reports reproducible
    if (!suite.out_dir.empty()) {
      std::filesystem::create_directories(suite.out_dir);
      cfg.history_path = suite.out_dir + "/bo_seed" + std::to_string(seed) + ".jsonl";
      std::filesystem::remove(cfg.history_path);
    } else {
      cfg.history_path.clear();
    }
    try {
      const auto bo = run_loop(cfg);
      rep.bo_best.push_back(best_series(bo, cfg.budget));
      rep.bo_final.push_back(final_true_value(cfg, bo));

      const auto rs = random_search(cfg);
      rep.random_best.push_back(best_series(rs, cfg.budget));
      rep.random_final.push_back(final_true_value(cfg, rs));
    } catch (const std::exception& e) {
      throw std::runtime_error("benchmark child run failed for seed " +
                               std::to_string(seed) + ": " + e.what());
    }
  }
  rep.wilcoxon_p = wilcoxon_signed_rank(rep.bo_final, rep.random_final).p_value;
  return rep;
}

namespace {

void write_trajectories(const std::string& path, const BenchmarkReport& rep,
                        const std::vector<std::vector<double>>& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "trial_index";
  for (const auto seed : rep.seeds) out << ",seed" << seed;
  out << '\n';
  const std::size_t budget = series.empty() ? 0 : series.front().size();
  for (std::size_t i = 0; i < budget; ++i) {
    out << i;
    for (const auto& s : series) out << ',' << fmt(s[i]);
    out << '\n';
  }
}

}  // namespace

void write_benchmark_files(const BenchmarkReport& rep, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_trajectories(out_dir + "/bo_trajectories.csv", rep, rep.bo_best);
  write_trajectories(out_dir + "/random_trajectories.csv", rep, rep.random_best);

  std::ofstream sum(out_dir + "/summary.csv");
  if (!sum) throw std::runtime_error("cannot write summary.csv");
  sum << "trial_index,bo_median,bo_q25,bo_q75,random_median,random_q25,random_q75\n";
  const std::size_t budget = rep.bo_best.empty() ? 0 : rep.bo_best.front().size();
  for (std::size_t i = 0; i < budget; ++i) {
    std::vector<double> bo, rs;
    for (const auto& s : rep.bo_best) bo.push_back(s[i]);
    for (const auto& s : rep.random_best) rs.push_back(s[i]);
    sum << i << ',' << fmt(quantile(bo, 0.5)) << ',' << fmt(quantile(bo, 0.25)) << ','
        << fmt(quantile(bo, 0.75)) << ',' << fmt(quantile(rs, 0.5)) << ','
        << fmt(quantile(rs, 0.25)) << ',' << fmt(quantile(rs, 0.75)) << '\n';
  }
  sum.close();

  nlohmann::json j;
  j["seeds"] = rep.seeds;
  j["bo_final"] = rep.bo_final;
  j["random_final"] = rep.random_final;
  j["wilcoxon_p"] = rep.wilcoxon_p;
  std::ofstream rj(out_dir + "/report.json");
  if (!rj) throw std::runtime_error("cannot write report.json");
  rj << j.dump(2) << '\n';
}

}  // namespace nebo
