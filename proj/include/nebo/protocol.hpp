#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nebo/evaluator.hpp"
#include "nebo/param_space.hpp"

namespace nebo::proto {

inline constexpr int kProtocolVersion = 1;

// Newline-delimited JSON messages over a stream socket. Unknown fields are
// ignored for forward compatibility.

struct Hello {
  std::string worker_id;
  std::vector<std::string> capabilities;
};

struct Dispatch {
  std::uint64_t trial_id = 0;
  Candidate candidate;
  std::uint64_t seed = 0;
  std::size_t replicates = 1;
  std::string evaluator_json;  // serialized EvaluatorHandle
};

struct Result {
  std::uint64_t trial_id = 0;
  Observation observation;
};

struct Fail {
  std::uint64_t trial_id = 0;
  std::string reason;
};

struct Heartbeat {
  std::string worker_id;
};

struct Shutdown {};

using Message = std::variant<Hello, Dispatch, Result, Fail, Heartbeat, Shutdown>;

std::string encode(const Message& m);

// Parses one line; throws std::runtime_error on malformed input or an
// unsupported protocol version.
Message decode(const std::string& line);

}  // namespace nebo::proto
