#include "nebo/orchestrator.hpp"

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "nebo/net.hpp"
#include "nebo/protocol.hpp"
#include "nebo/rng.hpp"

namespace nebo {
namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::size_t RunConfig::initial_count() const {
  return n_init > 0 ? n_init : default_initial_count(space);
}

void RunConfig::validate_config() const {
  if (space.dimension() == 0) throw std::invalid_argument("run config: empty space");
  if (initial_count() < 1) throw std::invalid_argument("run config: n_init must be >= 1");
  if (budget < initial_count())
    throw std::invalid_argument("run config: budget must be >= n_init");
  if (max_in_flight < 1)
    throw std::invalid_argument("run config: max_in_flight must be >= 1");
  if (replicates < 1) throw std::invalid_argument("run config: replicates must be >= 1");
  if (acq.fantasy_count < 1 || acq.restarts < 1 || acq.raw_samples < acq.restarts)
    throw std::invalid_argument("run config: bad acquisition settings");
}

RunConfig RunConfig::from_json_string(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  RunConfig c;
  c.evaluator = EvaluatorHandle::from_json_string(j.at("evaluator").dump());
  if (j.contains("space_file")) {
    c.space_file = j["space_file"].get<std::string>();
    c.space = ParamSpace::load(c.space_file);
  } else if (j.contains("space")) {
    c.space = ParamSpace::from_json_string(j["space"].dump());
  } else {
    c.space = c.evaluator.space();  // built-in space of the evaluator
  }
  c.budget = j.at("budget").get<std::size_t>();
  c.n_init = j.value("n_init", std::size_t{0});
  if (j.contains("acq")) {
    const auto& a = j["acq"];
    c.acq.fantasy_count = a.value("fantasy_count", std::size_t{64});
    c.acq.restarts = a.value("restarts", std::size_t{10});
    c.acq.raw_samples = a.value("raw_samples", std::size_t{512});
  }
  c.master_seed = j.value("master_seed", std::uint64_t{0});
  c.max_in_flight = j.value("max_in_flight", std::size_t{1});
  c.replicates = j.value("replicates", std::size_t{1});
  c.history_path = j.value("history_path", "");
  c.heartbeat_timeout_s = j.value("heartbeat_timeout_s", 60.0);
  c.validate_config();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

std::string RunConfig::to_json_string() const {
  nlohmann::json j;
  j["evaluator"] = nlohmann::json::parse(evaluator.to_json_string());
  if (!space_file.empty()) j["space_file"] = space_file;
  j["space"] = nlohmann::json::parse(space.to_json_string());
  j["budget"] = budget;
  j["n_init"] = n_init;
  j["acq"] = {{"fantasy_count", acq.fantasy_count},
              {"restarts", acq.restarts},
              {"raw_samples", acq.raw_samples}};
  j["master_seed"] = master_seed;
  j["max_in_flight"] = max_in_flight;
  j["replicates"] = replicates;
  j["history_path"] = history_path;
  j["heartbeat_timeout_s"] = heartbeat_timeout_s;
  return j.dump();
}

std::size_t LoopState::completed_count() const {
  std::size_t n = 0;
  for (const auto& r : history)
    if (r.state == TrialState::Completed) ++n;
  return n;
}

void apply_result(LoopState& st, std::uint64_t trial_id, const Observation& obs) {
  if (!st.pending.contains(trial_id)) {
    if (trial_id < st.history.size() &&
        (st.history[trial_id].state == TrialState::Completed ||
         st.history[trial_id].state == TrialState::Failed))
      throw std::invalid_argument("duplicate result for trial " + std::to_string(trial_id));
    throw std::invalid_argument("result for unknown trial " + std::to_string(trial_id));
  }
  TrialRecord& r = st.history[trial_id];
  r.state = TrialState::Completed;
  r.observation = obs;
  r.completed_at_ms = now_ms();
  st.pending.erase(trial_id);
}

void apply_failure(LoopState& st, std::uint64_t trial_id, const std::string& reason) {
  if (!st.pending.contains(trial_id)) {
    if (trial_id < st.history.size() &&
        (st.history[trial_id].state == TrialState::Completed ||
         st.history[trial_id].state == TrialState::Failed))
      throw std::invalid_argument("duplicate result for trial " + std::to_string(trial_id));
    throw std::invalid_argument("result for unknown trial " + std::to_string(trial_id));
  }
  TrialRecord& r = st.history[trial_id];
  r.state = TrialState::Failed;
  r.observation.reset();
  r.completed_at_ms = now_ms();
  r.fail_reason = reason.empty() ? "unspecified" : reason;
  st.pending.erase(trial_id);
}

Scheduler::Scheduler(RunConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate_config();
  init_design_ = initial_design(cfg_.space, cfg_.initial_count(),
                                derive_seed(cfg_.master_seed, seed_stream::kInitialDesign));
}

void Scheduler::restore(std::vector<TrialRecord> prior) {
  st_.history = std::move(prior);
  st_.pending.clear();
  redispatch_.clear();
  next_completion_index_ = 0;
  for (const auto& r : st_.history) {
    if (r.state == TrialState::Proposed || r.state == TrialState::Dispatched)
      redispatch_.push_back(r.trial_id);
    if (r.state == TrialState::Completed)
      next_completion_index_ = std::max(next_completion_index_, r.completion_index + 1);
  }
}

bool Scheduler::done() const { return st_.completed_count() >= cfg_.budget; }

void Scheduler::fit_models() {
  Matrix x;
  std::vector<double> y, y_var, c, c_var;
  for (const auto& r : st_.history) {
    if (r.state != TrialState::Completed) continue;
    x.append_row(encode(r.candidate, cfg_.space));
    y.push_back(r.observation->y);
    y_var.push_back(r.observation->y_var);
    c.push_back(r.observation->c);
    c_var.push_back(r.observation->c_var);
  }
  if (y.empty()) throw std::logic_error("fit_models: no completed trials");
  const auto n = y.size();
  st_.obj_model = GpModel::fit_heteroskedastic(x, y, y_var,
                                               derive_seed(cfg_.master_seed, seed_stream::kModelFit, n));
  st_.con_model = GpModel::fit(x, c, NoiseSpec::fixed(c_var),
                               derive_seed(cfg_.master_seed, seed_stream::kModelFit, n + (1ULL << 32)));
  models_at_ = n;
}

Candidate Scheduler::propose_next(std::uint64_t next_id) {
  if (st_.completed_count() == 0)
    throw std::logic_error("propose: no completed observations yet");
  if (models_at_ != st_.completed_count()) fit_models();
  std::vector<Candidate> pending_candidates;
  for (const auto id : st_.pending) pending_candidates.push_back(st_.history[id].candidate);
  AcqConfig acq = cfg_.acq;
  acq.seed = derive_seed(cfg_.master_seed, seed_stream::kProposal, next_id);
  return propose(*st_.obj_model, *st_.con_model, cfg_.space, pending_candidates, acq);
}

std::optional<TrialRecord> Scheduler::next_dispatch(const std::string& worker_id) {
  if (st_.pending.size() >= cfg_.max_in_flight) return std::nullopt;

  const std::size_t completed = st_.completed_count();
  // a re-dispatched trial will complete, so it competes for budget headroom
  if (completed + st_.pending.size() >= cfg_.budget) return std::nullopt;

  if (!redispatch_.empty()) {
    const auto id = redispatch_.front();
    redispatch_.pop_front();
    TrialRecord& r = st_.history[id];
    r.state = TrialState::Dispatched;
    r.worker_id = worker_id;
    st_.pending.insert(id);
    return r;
  }

  const std::uint64_t next_id = st_.history.size();
  Candidate cand;
  if (next_id < init_design_.size()) {
    cand = init_design_[next_id];
  } else {
    if (completed == 0) return std::nullopt;  // wait for the first completion
    cand = propose_next(next_id);
  }

  TrialRecord r;
  r.trial_id = next_id;
  r.candidate = std::move(cand);
  r.state = TrialState::Dispatched;
  r.worker_id = worker_id;
  r.proposed_at_ms = now_ms();
  r.seed = derive_seed(cfg_.master_seed, seed_stream::kTrial, next_id);
  st_.history.push_back(r);
  st_.pending.insert(next_id);
  return r;
}

void Scheduler::on_result(std::uint64_t trial_id, const Observation& obs) {
  apply_result(st_, trial_id, obs);
  st_.history[trial_id].completion_index = next_completion_index_++;
}

std::vector<std::uint64_t> Scheduler::fail_stale_redispatch() {
  std::vector<std::uint64_t> out;
  while (!redispatch_.empty()) {
    const auto id = redispatch_.front();
    redispatch_.pop_front();
    TrialRecord& r = st_.history[id];
    r.state = TrialState::Failed;
    r.observation.reset();
    r.completed_at_ms = now_ms();
    r.fail_reason = "superseded on resume";
    out.push_back(id);
  }
  return out;
}

void Scheduler::on_failure(std::uint64_t trial_id, const std::string& reason) {
  apply_failure(st_, trial_id, reason);
  if (++failure_count_ > 10 * cfg_.budget)
    throw std::runtime_error("too many failed trials; aborting run");
}

// --- in-process execution ----------------------------------------------------

namespace {

struct ResultMsg {
  std::uint64_t trial_id;
  std::optional<Observation> obs;
  std::string fail_reason;
};

struct WorkQueues {
  std::mutex mu;
  std::condition_variable cv_work, cv_result;
  std::queue<proto::Dispatch> work;
  std::queue<ResultMsg> results;
  bool shutdown = false;
};

void worker_main(WorkQueues& q, const EvaluatorHandle& handle) {
  for (;;) {
    proto::Dispatch task;
    {
      std::unique_lock lk(q.mu);
      q.cv_work.wait(lk, [&] { return q.shutdown || !q.work.empty(); });
      if (q.shutdown && q.work.empty()) return;
      task = std::move(q.work.front());
      q.work.pop();
    }
    ResultMsg msg{task.trial_id, std::nullopt, ""};
    try {
      msg.obs = observe(handle, task.candidate, task.replicates, task.seed);
    } catch (const std::exception& e) {
      msg.fail_reason = e.what();
    }
    {
      std::lock_guard lk(q.mu);
      q.results.push(std::move(msg));
    }
    q.cv_result.notify_all();
  }
}

HistoryMeta meta_for(const RunConfig& cfg) {
  HistoryMeta meta;
  meta.master_seed = cfg.master_seed;
  meta.space_json = cfg.space.to_json_string();
  meta.config_json = cfg.to_json_string();
  return meta;
}

// Opens the history (resuming if asked) and installs prior trials.
void prepare_history(const RunConfig& cfg, bool resume, Scheduler& sched,
                     HistoryWriter& writer) {
  if (cfg.history_path.empty()) return;
  const bool exists = std::filesystem::exists(cfg.history_path);
  if (resume && exists) {
    const HistoryFile hf = load_history(cfg.history_path);
    if (hf.meta.master_seed != cfg.master_seed)
      throw std::runtime_error("resume: history master_seed does not match config");
    if (nlohmann::json::parse(hf.meta.space_json) !=
        nlohmann::json::parse(cfg.space.to_json_string()))
      throw std::runtime_error("resume: history space does not match config");
    sched.restore(hf.trials);
    writer.open(cfg.history_path, meta_for(cfg), /*append=*/true);
  } else {
    if (exists && !resume)
      throw std::runtime_error("history file exists; pass resume to continue: " +
                               cfg.history_path);
    writer.open(cfg.history_path, meta_for(cfg), /*append=*/false);
  }
}

}  // namespace

std::vector<TrialRecord> run_loop(const RunConfig& cfg, bool resume) {
  cfg.validate_config();
  if (cfg.evaluator.kind == EvaluatorKind::ExternalWorker)
    throw std::invalid_argument("run_loop: external_worker runs need run_server");

  Scheduler sched(cfg);
  HistoryWriter writer;
  prepare_history(cfg, resume, sched, writer);

  WorkQueues queues;
  std::vector<std::thread> pool;
  pool.reserve(cfg.max_in_flight);
  for (std::size_t i = 0; i < cfg.max_in_flight; ++i)
    pool.emplace_back(worker_main, std::ref(queues), std::cref(cfg.evaluator));

  const std::string worker_name = "local";
  try {
    while (!sched.done()) {
      // fill every free slot; write-ahead before handing work out
      while (auto rec = sched.next_dispatch(worker_name)) {
        if (writer.is_open()) writer.append(*rec);
        proto::Dispatch d;
        d.trial_id = rec->trial_id;
        d.candidate = rec->candidate;
        d.seed = rec->seed;
        d.replicates = cfg.replicates;
        {
          std::lock_guard lk(queues.mu);
          queues.work.push(std::move(d));
        }
        queues.cv_work.notify_one();
      }

      ResultMsg msg;
      {
        std::unique_lock lk(queues.mu);
        queues.cv_result.wait(lk, [&] { return !queues.results.empty(); });
        msg = std::move(queues.results.front());
        queues.results.pop();
      }
      if (msg.obs)
        sched.on_result(msg.trial_id, *msg.obs);
      else
        sched.on_failure(msg.trial_id, msg.fail_reason);
      if (writer.is_open()) writer.append(sched.state().history[msg.trial_id]);
    }
  } catch (...) {
    {
      std::lock_guard lk(queues.mu);
      queues.shutdown = true;
    }
    queues.cv_work.notify_all();
    for (auto& t : pool) t.join();
    throw;
  }

  {
    std::lock_guard lk(queues.mu);
    queues.shutdown = true;
  }
  queues.cv_work.notify_all();
  for (auto& t : pool) t.join();
  for (const auto id : sched.fail_stale_redispatch())
    if (writer.is_open()) writer.append(sched.state().history[id]);
  return sched.history();
}

// --- socket execution ---------------------------------------------------------

namespace {

struct WorkerConn {
  int fd = -1;
  std::string id;
  net::LineReader reader;
  bool said_hello = false;
  std::optional<std::uint64_t> busy_trial;
  std::int64_t last_seen_ms = 0;
};

}  // namespace

std::vector<TrialRecord> run_server(const RunConfig& cfg, const std::string& host,
                                    int port, bool resume) {
  cfg.validate_config();
  Scheduler sched(cfg);
  HistoryWriter writer;
  prepare_history(cfg, resume, sched, writer);

  const int listen_fd = net::listen_on(host, port);
  std::map<int, WorkerConn> workers;
  const auto deadline_for_first_worker =
      now_ms() + static_cast<std::int64_t>(cfg.heartbeat_timeout_s * 1000.0);

  auto fail_trial = [&](WorkerConn& w, const std::string& reason) {
    if (!w.busy_trial) return;
    sched.on_failure(*w.busy_trial, reason);
    if (writer.is_open()) writer.append(sched.state().history[*w.busy_trial]);
    w.busy_trial.reset();
  };

  auto drop_worker = [&](int fd, const std::string& reason) {
    auto it = workers.find(fd);
    if (it == workers.end()) return;
    fail_trial(it->second, reason);
    net::close_fd(fd);
    workers.erase(it);
  };

  auto handle_line = [&](WorkerConn& w, const std::string& line) {
    const proto::Message msg = proto::decode(line);
    w.last_seen_ms = now_ms();
    if (const auto* h = std::get_if<proto::Hello>(&msg)) {
      w.id = h->worker_id;
      w.said_hello = true;
    } else if (const auto* r = std::get_if<proto::Result>(&msg)) {
      if (w.busy_trial && *w.busy_trial == r->trial_id) w.busy_trial.reset();
      try {
        sched.on_result(r->trial_id, r->observation);
        if (writer.is_open()) writer.append(sched.state().history[r->trial_id]);
      } catch (const std::invalid_argument&) {
        // stale result for a trial already failed over to another worker
      }
    } else if (const auto* f = std::get_if<proto::Fail>(&msg)) {
      if (w.busy_trial && *w.busy_trial == f->trial_id) w.busy_trial.reset();
      try {
        sched.on_failure(f->trial_id, f->reason);
        if (writer.is_open()) writer.append(sched.state().history[f->trial_id]);
      } catch (const std::invalid_argument&) {
      }
    }
    // HEARTBEAT only refreshes last_seen; SHUTDOWN from workers is ignored
  };

  while (!sched.done()) {
    // dispatch to idle workers in fd order (stable given arrival order);
    // iterate over a snapshot so a dropped worker cannot invalidate the loop
    std::vector<int> worker_fds;
    for (const auto& [fd, w] : workers) worker_fds.push_back(fd);
    for (const int fd : worker_fds) {
      auto it = workers.find(fd);
      if (it == workers.end()) continue;
      WorkerConn& w = it->second;
      if (!w.said_hello || w.busy_trial) continue;
      auto rec = sched.next_dispatch(w.id);
      if (!rec) break;
      if (writer.is_open()) writer.append(*rec);
      proto::Dispatch d;
      d.trial_id = rec->trial_id;
      d.candidate = rec->candidate;
      d.seed = rec->seed;
      d.replicates = cfg.replicates;
      d.evaluator_json = cfg.evaluator.to_json_string();
      if (!net::send_line(fd, proto::encode(d))) {
        drop_worker(fd, "worker write failed");
        continue;
      }
      w.busy_trial = rec->trial_id;
    }

    if (workers.empty() && now_ms() > deadline_for_first_worker)
      throw std::runtime_error("no workers connected; worker pool empty at start");

    // poll listen + worker sockets
    std::vector<int> fds;
    fds.push_back(listen_fd);
    for (const auto& [fd, w] : workers) fds.push_back(fd);
    const auto ready = net::poll_readable(fds, 250);

    for (const int fd : ready) {
      if (fd == listen_fd) {
        const int nfd = net::accept_client(listen_fd);
        if (nfd >= 0) {
          WorkerConn w;
          w.fd = nfd;
          w.last_seen_ms = now_ms();
          workers.emplace(nfd, std::move(w));
        }
        continue;
      }
      auto it = workers.find(fd);
      if (it == workers.end()) continue;
      if (!it->second.reader.fill(fd)) {
        drop_worker(fd, "worker disconnected");
        continue;
      }
      bool dead = false;
      while (auto line = it->second.reader.next_line()) {
        try {
          handle_line(it->second, *line);
        } catch (const std::exception&) {
          drop_worker(fd, "protocol error");
          dead = true;
          break;
        }
      }
      if (dead) continue;
    }

    // heartbeat timeouts mark the worker dead and its trial failed
    const auto timeout_ms = static_cast<std::int64_t>(cfg.heartbeat_timeout_s * 1000.0);
    std::vector<int> stale;
    for (const auto& [fd, w] : workers)
      if (now_ms() - w.last_seen_ms > timeout_ms) stale.push_back(fd);
    for (const int fd : stale) drop_worker(fd, "heartbeat timeout");
  }

  for (const auto& [fd, w] : workers) {
    net::send_line(fd, proto::encode(proto::Shutdown{}));
    net::close_fd(fd);
  }
  net::close_fd(listen_fd);
  for (const auto id : sched.fail_stale_redispatch())
    if (writer.is_open()) writer.append(sched.state().history[id]);
  return sched.history();
}

}  // namespace nebo
