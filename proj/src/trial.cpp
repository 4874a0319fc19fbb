#include "nebo/trial.hpp"

#include <map>
#include <stdexcept>

#include <json.hpp>

namespace nebo {

std::string to_string(TrialState s) {
  switch (s) {
    case TrialState::Proposed: return "proposed";
    case TrialState::Dispatched: return "dispatched";
    case TrialState::Completed: return "completed";
    case TrialState::Failed: return "failed";
  }
  return "proposed";
}

TrialState trial_state_from_string(const std::string& s) {
  if (s == "proposed") return TrialState::Proposed;
  if (s == "dispatched") return TrialState::Dispatched;
  if (s == "completed") return TrialState::Completed;
  if (s == "failed") return TrialState::Failed;
  throw std::invalid_argument("unknown trial state: " + s);
}

std::string transition_line(const TrialRecord& r) {
  nlohmann::json j{{"type", "trial"},
                   {"trial_id", r.trial_id},
                   {"state", to_string(r.state)},
                   {"seed", r.seed},
                   {"candidate", r.candidate.values}};
  if (r.observation) {
    j["observation"] = {{"y", r.observation->y},
                        {"y_var", r.observation->y_var},
                        {"c", r.observation->c},
                        {"c_var", r.observation->c_var}};
  }
  if (r.worker_id) j["worker_id"] = *r.worker_id;
  if (r.proposed_at_ms) j["proposed_at_ms"] = r.proposed_at_ms;
  if (r.completed_at_ms) j["completed_at_ms"] = r.completed_at_ms;
  if (r.completion_index >= 0) j["completion_index"] = r.completion_index;
  if (!r.fail_reason.empty()) j["fail_reason"] = r.fail_reason;
  return j.dump();
}

void HistoryWriter::open(const std::string& path, const HistoryMeta& meta, bool append) {
  out_.open(path, append ? std::ios::app : std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot open history file: " + path);
  if (!append) {
    nlohmann::json j{{"type", "meta"},
                     {"version", meta.version},
                     {"master_seed", meta.master_seed},
                     {"space", nlohmann::json::parse(meta.space_json)},
                     {"config", nlohmann::json::parse(meta.config_json)}};
    out_ << j.dump() << "\n";
    out_.flush();
  }
}

void HistoryWriter::append(const TrialRecord& transition) {
  out_ << transition_line(transition) << "\n";
  out_.flush();
}

namespace {

TrialRecord record_from_json(const nlohmann::json& j) {
  TrialRecord r;
  r.trial_id = j.at("trial_id").get<std::uint64_t>();
  r.state = trial_state_from_string(j.at("state").get<std::string>());
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& [k, v] : j.at("candidate").items())
    r.candidate.values[k] = v.get<double>();
  if (j.contains("observation")) {
    const auto& o = j["observation"];
    r.observation = Observation{o.at("y").get<double>(), o.at("y_var").get<double>(),
                                o.at("c").get<double>(), o.at("c_var").get<double>()};
  }
  if (j.contains("worker_id")) r.worker_id = j["worker_id"].get<std::string>();
  r.proposed_at_ms = j.value("proposed_at_ms", std::int64_t{0});
  r.completed_at_ms = j.value("completed_at_ms", std::int64_t{0});
  r.completion_index = j.value("completion_index", std::int64_t{-1});
  r.fail_reason = j.value("fail_reason", "");
  return r;
}

}  // namespace

HistoryFile load_history(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open history file: " + path);
  HistoryFile hf;
  std::map<std::uint64_t, std::size_t> index;
  std::string line;
  std::size_t line_no = 0;
  bool have_meta = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("corrupt history line " + std::to_string(line_no) + ": " +
                               e.what());
    }
    const auto type = j.value("type", "");
    if (type == "meta") {
      if (j.at("version").get<int>() != 1)
        throw std::runtime_error("unsupported history version");
      hf.meta.version = 1;
      hf.meta.master_seed = j.at("master_seed").get<std::uint64_t>();
      hf.meta.space_json = j.at("space").dump();
      hf.meta.config_json = j.at("config").dump();
      have_meta = true;
    } else if (type == "trial") {
      const TrialRecord r = record_from_json(j);
      auto it = index.find(r.trial_id);
      if (it == index.end()) {
        if (r.trial_id != hf.trials.size())
          throw std::runtime_error("history trial ids are not gapless");
        index.emplace(r.trial_id, hf.trials.size());
        hf.trials.push_back(r);
      } else {
        // later transitions override earlier ones; timestamps accumulate
        TrialRecord& cur = hf.trials[it->second];
        const auto proposed_at = cur.proposed_at_ms;
        cur = r;
        if (cur.proposed_at_ms == 0) cur.proposed_at_ms = proposed_at;
      }
    } else {
      throw std::runtime_error("unknown record type in history line " +
                               std::to_string(line_no));
    }
  }
  if (!have_meta) throw std::runtime_error("history file has no meta record");
  return hf;
}

std::optional<std::size_t> best_feasible_index(const std::vector<TrialRecord>& history) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& r = history[i];
    if (r.state != TrialState::Completed || !r.observation) continue;
    if (r.observation->c > 0.0) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = history[*best];
    if (r.observation->y > b.observation->y ||
        (r.observation->y == b.observation->y && r.trial_id < b.trial_id))
      best = i;
  }
  return best;
}

std::optional<std::pair<Candidate, Observation>> best_feasible(
    const std::vector<TrialRecord>& history) {
  const auto idx = best_feasible_index(history);
  if (!idx) return std::nullopt;
  return std::make_pair(history[*idx].candidate, *history[*idx].observation);
}

}  // namespace nebo
