#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nebo/acquisition.hpp"
#include "nebo/evaluator.hpp"
#include "nebo/gp.hpp"
#include "nebo/param_space.hpp"
#include "nebo/trial.hpp"

namespace nebo {

struct RunConfig {
  ParamSpace space;        // resolved at load
  std::string space_file;  // optional source path
  EvaluatorHandle evaluator;
  std::size_t budget = 50;
  std::size_t n_init = 0;  // 0 -> max(2d, 8)
  AcqConfig acq;
  std::uint64_t master_seed = 0;
  std::size_t max_in_flight = 1;
  std::size_t replicates = 1;
  std::string history_path;
  double heartbeat_timeout_s = 60.0;

  std::size_t initial_count() const;
  void validate_config() const;  // budget >= n_init >= 1, max_in_flight >= 1

  static RunConfig from_json_string(const std::string& text);
  static RunConfig load(const std::string& path);
  std::string to_json_string() const;
};

struct LoopState {
  std::vector<TrialRecord> history;   // by trial id
  std::set<std::uint64_t> pending;    // dispatched, not yet terminal
  std::optional<GpModel> obj_model;   // trained on completed trials only
  std::optional<GpModel> con_model;

  std::size_t completed_count() const;
};

// Marks the trial completed; throws on unknown or already-terminal ids.
void apply_result(LoopState& st, std::uint64_t trial_id, const Observation& obs);
// Marks the trial failed; same error contract. Failed trials carry no
// observation and never enter model fitting.
void apply_failure(LoopState& st, std::uint64_t trial_id, const std::string& reason);

// Pure proposal/accounting policy of the asynchronous loop: what to dispatch
// next and how results fold into state. No I/O; candidate choice depends only
// on the configuration and the order in which results are applied.
class Scheduler {
 public:
  explicit Scheduler(RunConfig cfg);

  // Installs prior records on resume. Dangling proposed/dispatched trials are
  // queued for re-dispatch with their original candidate and seed, so a
  // resumed run replays exactly like the uninterrupted one.
  void restore(std::vector<TrialRecord> prior);

  bool done() const;

  // Next trial to dispatch, if capacity and work are both available. The
  // returned record is already marked dispatched and pending.
  std::optional<TrialRecord> next_dispatch(const std::string& worker_id);

  void on_result(std::uint64_t trial_id, const Observation& obs);
  void on_failure(std::uint64_t trial_id, const std::string& reason);

  // Fails any queued re-dispatch trials that no longer fit in the budget;
  // returns their ids so the caller can persist the transitions.
  std::vector<std::uint64_t> fail_stale_redispatch();

  const LoopState& state() const { return st_; }
  const RunConfig& config() const { return cfg_; }
  std::vector<TrialRecord> history() const { return st_.history; }

  // Fits the objective/constraint pair on the completed trials (exposed for
  // verification against models refit from a history file).
  void fit_models();

 private:
  Candidate propose_next(std::uint64_t next_id);

  RunConfig cfg_;
  LoopState st_;
  std::vector<Candidate> init_design_;
  std::deque<std::uint64_t> redispatch_;
  std::size_t failure_count_ = 0;
  std::size_t models_at_ = static_cast<std::size_t>(-1);
  std::int64_t next_completion_index_ = 0;
};

// Runs the loop with an in-process worker pool of max_in_flight threads.
// With max_in_flight = 1 the loop is classical sequential BO and the
// candidate sequence is a pure function of the configuration.
std::vector<TrialRecord> run_loop(const RunConfig& cfg, bool resume = false);

// Runs the loop against external workers speaking the wire protocol.
std::vector<TrialRecord> run_server(const RunConfig& cfg, const std::string& host,
                                    int port, bool resume = false);

}  // namespace nebo
