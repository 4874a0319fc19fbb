#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "nebo/evaluator.hpp"
#include "nebo/param_space.hpp"

namespace nebo {

enum class TrialState { Proposed, Dispatched, Completed, Failed };

std::string to_string(TrialState s);
TrialState trial_state_from_string(const std::string& s);

// Full lifecycle of one candidate evaluation.
struct TrialRecord {
  std::uint64_t trial_id = 0;
  Candidate candidate;
  TrialState state = TrialState::Proposed;
  std::optional<Observation> observation;
  std::optional<std::string> worker_id;
  std::int64_t proposed_at_ms = 0;
  std::int64_t completed_at_ms = 0;
  std::int64_t completion_index = -1;  // order of completion within the run
  std::uint64_t seed = 0;
  std::string fail_reason;
};

// One state transition as a self-describing JSON line.
std::string transition_line(const TrialRecord& r);

struct HistoryMeta {
  int version = 1;
  std::string space_json;
  std::uint64_t master_seed = 0;
  std::string config_json;  // opaque echo of the run configuration
};

// Append-only, line-delimited history with write-ahead semantics: every
// transition is flushed to disk before the action it records takes effect.
class HistoryWriter {
 public:
  HistoryWriter() = default;
  void open(const std::string& path, const HistoryMeta& meta, bool append);
  void append(const TrialRecord& transition);
  bool is_open() const { return out_.is_open(); }

 private:
  std::ofstream out_;
};

struct HistoryFile {
  HistoryMeta meta;
  // final state per trial, in first-appearance (persistence) order
  std::vector<TrialRecord> trials;
};

// Replays the transitions in a history file; throws on corrupt input.
HistoryFile load_history(const std::string& path);

// Among completed trials with c <= 0: the one with maximal y, ties broken by
// the lowest trial id. Nullopt when no feasible completion exists.
std::optional<std::pair<Candidate, Observation>> best_feasible(
    const std::vector<TrialRecord>& history);

// Index of the best-feasible record, same rule as above.
std::optional<std::size_t> best_feasible_index(const std::vector<TrialRecord>& history);

}  // namespace nebo
