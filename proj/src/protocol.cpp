#include "nebo/protocol.hpp"

#include <stdexcept>

#include <json.hpp>

namespace nebo::proto {
namespace {

using nlohmann::json;

json base(const char* kind) { return json{{"v", kProtocolVersion}, {"kind", kind}}; }

}  // namespace

std::string encode(const Message& m) {
  json j;
  if (const auto* h = std::get_if<Hello>(&m)) {
    j = base("HELLO");
    j["worker_id"] = h->worker_id;
    j["capabilities"] = h->capabilities;
  } else if (const auto* d = std::get_if<Dispatch>(&m)) {
    j = base("DISPATCH");
    j["trial_id"] = d->trial_id;
    j["candidate"] = d->candidate.values;
    j["seed"] = d->seed;
    j["replicates"] = d->replicates;
    j["evaluator"] = json::parse(d->evaluator_json);
  } else if (const auto* r = std::get_if<Result>(&m)) {
    j = base("RESULT");
    j["trial_id"] = r->trial_id;
    j["y"] = r->observation.y;
    j["y_var"] = r->observation.y_var;
    j["c"] = r->observation.c;
    j["c_var"] = r->observation.c_var;
  } else if (const auto* f = std::get_if<Fail>(&m)) {
    j = base("FAIL");
    j["trial_id"] = f->trial_id;
    j["reason"] = f->reason;
  } else if (const auto* hb = std::get_if<Heartbeat>(&m)) {
    j = base("HEARTBEAT");
    j["worker_id"] = hb->worker_id;
  } else {
    j = base("SHUTDOWN");
  }
  return j.dump();
}

Message decode(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("malformed protocol line: ") + e.what());
  }
  const int v = j.value("v", -1);
  if (v != kProtocolVersion)
    throw std::runtime_error("unsupported protocol version " + std::to_string(v));
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "HELLO") {
    Hello h;
    h.worker_id = j.at("worker_id").get<std::string>();
    if (j.contains("capabilities"))
      h.capabilities = j["capabilities"].get<std::vector<std::string>>();
    return h;
  }
  if (kind == "DISPATCH") {
    Dispatch d;
    d.trial_id = j.at("trial_id").get<std::uint64_t>();
    for (const auto& [k, val] : j.at("candidate").items())
      d.candidate.values[k] = val.get<double>();
    d.seed = j.at("seed").get<std::uint64_t>();
    d.replicates = j.value("replicates", std::size_t{1});
    d.evaluator_json = j.at("evaluator").dump();
    return d;
  }
  if (kind == "RESULT") {
    Result r;
    r.trial_id = j.at("trial_id").get<std::uint64_t>();
    r.observation = {j.at("y").get<double>(), j.at("y_var").get<double>(),
                     j.at("c").get<double>(), j.at("c_var").get<double>()};
    return r;
  }
  if (kind == "FAIL") {
    Fail f;
    f.trial_id = j.at("trial_id").get<std::uint64_t>();
    f.reason = j.value("reason", "");
    return f;
  }
  if (kind == "HEARTBEAT") return Heartbeat{j.at("worker_id").get<std::string>()};
  if (kind == "SHUTDOWN") return Shutdown{};
  throw std::runtime_error("unknown message kind: " + kind);
}

}  // namespace nebo::proto
