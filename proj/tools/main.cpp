#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nebo/orchestrator.hpp"
#include "nebo/report.hpp"
#include "nebo/trial.hpp"
#include "nebo/worker.hpp"

namespace {

std::pair<std::string, int> split_host_port(const std::string& s) {
  const auto pos = s.rfind(':');
  if (pos == std::string::npos)
    throw CLI::ValidationError("expected host:port, got '" + s + "'");
  return {s.substr(0, pos), std::stoi(s.substr(pos + 1))};
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asynchronous constrained Bayesian optimization engine"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "launch or resume an optimization run");
  std::string run_config_path, run_history, run_listen;
  bool run_resume = false;
  std::optional<std::uint64_t> run_seed;
  run->add_option("--config", run_config_path, "run configuration (JSON)")->required();
  run->add_flag("--resume", run_resume, "resume from the history file");
  run->add_option("--seed", run_seed, "override master_seed");
  run->add_option("--history", run_history, "override history_path");
  run->add_option("--listen", run_listen, "serve external workers on host:port");

  // worker
  auto* worker = app.add_subcommand("worker", "start an evaluation worker");
  std::string worker_connect, worker_id;
  worker->add_option("--connect", worker_connect, "orchestrator host:port")->required();
  worker->add_option("--id", worker_id, "worker identifier");

  // bench
  auto* bench = app.add_subcommand("bench", "run the BO vs random-search benchmark");
  std::string bench_suite, bench_seeds, bench_out;
  bench->add_option("--suite", bench_suite, "benchmark suite (JSON)")->required();
  bench->add_option("--seeds", bench_seeds, "comma-separated seed list")->required();
  bench->add_option("--out", bench_out, "override the suite's output directory");

  // report
  auto* report = app.add_subcommand("report", "emit a convergence trace from a history");
  std::string report_history, report_out;
  report->add_option("--history", report_history, "history file (JSONL)")->required();
  report->add_option("--out", report_out, "output CSV path (default: stdout)");

  // best
  auto* best = app.add_subcommand("best", "print the best feasible trial of a history");
  std::string best_history;
  best->add_option("--history", best_history, "history file (JSONL)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run) {
      nebo::RunConfig cfg = nebo::RunConfig::load(run_config_path);
      if (run_seed) cfg.master_seed = *run_seed;
      if (!run_history.empty()) cfg.history_path = run_history;
      std::vector<nebo::TrialRecord> history;
      if (!run_listen.empty()) {
        const auto [host, port] = split_host_port(run_listen);
        history = nebo::run_server(cfg, host, port, run_resume);
      } else {
        history = nebo::run_loop(cfg, run_resume);
      }
      const auto bestrec = nebo::best_feasible(history);
      std::size_t completed = 0, failed = 0;
      for (const auto& r : history) {
        completed += r.state == nebo::TrialState::Completed;
        failed += r.state == nebo::TrialState::Failed;
      }
      std::cout << "completed " << completed << " trials (" << failed << " failed)\n";
      if (bestrec) {
        nlohmann::json j{{"candidate", bestrec->first.values},
                         {"y", bestrec->second.y},
                         {"c", bestrec->second.c}};
        std::cout << "best feasible: " << j.dump() << "\n";
      } else {
        std::cout << "best feasible: none\n";
      }
      return 0;
    }

    if (*worker) {
      const auto [host, port] = split_host_port(worker_connect);
      const std::size_t n = nebo::run_worker(host, port, worker_id);
      std::cout << "worker finished after " << n << " evaluations\n";
      return 0;
    }

    if (*bench) {
      nebo::BenchmarkSuite suite = nebo::BenchmarkSuite::load(bench_suite);
      if (!bench_out.empty()) suite.out_dir = bench_out;
      const auto seeds = parse_seeds(bench_seeds);
      const auto rep = nebo::run_benchmark(suite, seeds);
      nebo::write_benchmark_files(rep, suite.out_dir);
      std::cout << "benchmark over " << seeds.size() << " seeds: wilcoxon_p = "
                << rep.wilcoxon_p << "\n"
                << "report files in " << suite.out_dir << "\n";
      return 0;
    }

    if (*report) {
      const auto hf = nebo::load_history(report_history);
      const auto csv = nebo::trace_to_csv(nebo::convergence_trace(hf.trials));
      if (report_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream out(report_out);
        if (!out) throw std::runtime_error("cannot write " + report_out);
        out << csv;
      }
      return 0;
    }

    if (*best) {
      const auto hf = nebo::load_history(best_history);
      const auto bestrec = nebo::best_feasible(hf.trials);
      if (!bestrec) {
        std::cout << "none\n";
        return 0;
      }
      nlohmann::json j{{"candidate", bestrec->first.values},
                       {"y", bestrec->second.y},
                       {"y_var", bestrec->second.y_var},
                       {"c", bestrec->second.c},
                       {"c_var", bestrec->second.c_var}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
