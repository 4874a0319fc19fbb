#include "nebo/worker.hpp"

#include <unistd.h>

#include <string>

#include "nebo/evaluator.hpp"
#include "nebo/net.hpp"
#include "nebo/protocol.hpp"

namespace nebo {

std::size_t run_worker(const std::string& host, int port, const std::string& worker_id) {
  const int fd = net::connect_to(host, port);
  const std::string id =
      worker_id.empty() ? "worker-" + std::to_string(::getpid()) : worker_id;

  proto::Hello hello;
  hello.worker_id = id;
  hello.capabilities = {"branin", "hartmann6", "simulated_trainer"};
  if (!net::send_line(fd, proto::encode(hello))) {
    net::close_fd(fd);
    throw std::runtime_error("worker: cannot send hello");
  }

  net::LineReader reader;
  std::size_t evaluated = 0;
  constexpr int kHeartbeatMs = 15000;
  for (;;) {
    const auto ready = net::poll_readable({fd}, kHeartbeatMs);
    if (ready.empty()) {
      if (!net::send_line(fd, proto::encode(proto::Heartbeat{id}))) break;
      continue;
    }
    if (!reader.fill(fd)) break;
    bool shutdown = false;
    while (auto line = reader.next_line()) {
      const proto::Message msg = proto::decode(*line);
      if (std::holds_alternative<proto::Shutdown>(msg)) {
        shutdown = true;
        break;
      }
      const auto* d = std::get_if<proto::Dispatch>(&msg);
      if (!d) continue;  // masters do not send anything else we act on
      try {
        const EvaluatorHandle handle = EvaluatorHandle::from_json_string(d->evaluator_json);
        const Observation obs = observe(handle, d->candidate, d->replicates, d->seed);
        ++evaluated;
        net::send_line(fd, proto::encode(proto::Result{d->trial_id, obs}));
      } catch (const std::exception& e) {
        net::send_line(fd, proto::encode(proto::Fail{d->trial_id, e.what()}));
      }
    }
    if (shutdown) break;
  }
  net::close_fd(fd);
  return evaluated;
}

}  // namespace nebo
