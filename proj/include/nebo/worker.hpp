#pragma once

#include <string>

namespace nebo {

// Connects to an orchestrator, announces itself, and serves DISPATCH
// messages until SHUTDOWN or disconnect. Returns the number of evaluations
// performed. Heartbeats are sent while idle.
std::size_t run_worker(const std::string& host, int port, const std::string& worker_id);

}  // namespace nebo
