#include "nebo/param_space.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nebo/lowdisc.hpp"
#include "nebo/rng.hpp"

namespace nebo {

std::string to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::Continuous: return "continuous";
    case ParamKind::Integer: return "integer";
    case ParamKind::Binary: return "binary";
  }
  return "continuous";
}

ParamKind param_kind_from_string(const std::string& s) {
  if (s == "continuous") return ParamKind::Continuous;
  if (s == "integer") return ParamKind::Integer;
  if (s == "binary") return ParamKind::Binary;
  throw std::invalid_argument("unknown parameter kind: " + s);
}

ParamSpace::ParamSpace(std::vector<ParamSpec> specs) : specs_(std::move(specs)) {
  std::set<std::string> names;
  for (auto& spec : specs_) {
    if (!names.insert(spec.name).second)
      throw std::invalid_argument("duplicate parameter name: " + spec.name);
    if (spec.kind == ParamKind::Binary) {
      spec.lower = 0.0;
      spec.upper = 1.0;
      continue;
    }
    if (!(spec.lower < spec.upper))
      throw std::invalid_argument("parameter " + spec.name + ": lower must be < upper");
    if (spec.kind == ParamKind::Integer &&
        (spec.lower != std::floor(spec.lower) || spec.upper != std::floor(spec.upper)))
      throw std::invalid_argument("parameter " + spec.name + ": integer bounds must be whole");
  }
}

std::string ParamSpace::to_json_string() const {
  nlohmann::json j;
  j["params"] = nlohmann::json::array();
  for (const auto& s : specs_) {
    nlohmann::json p{{"name", s.name},
                     {"kind", to_string(s.kind)},
                     {"lower", s.lower},
                     {"upper", s.upper}};
    if (!s.note.empty()) p["note"] = s.note;
    j["params"].push_back(p);
  }
  return j.dump(2) + "\n";
}

ParamSpace ParamSpace::from_json_string(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  std::vector<ParamSpec> specs;
  for (const auto& p : j.at("params")) {
    ParamSpec s;
    s.name = p.at("name").get<std::string>();
    s.kind = param_kind_from_string(p.at("kind").get<std::string>());
    if (s.kind != ParamKind::Binary) {
      s.lower = p.at("lower").get<double>();
      s.upper = p.at("upper").get<double>();
    }
    s.note = p.value("note", "");
    specs.push_back(std::move(s));
  }
  return ParamSpace(std::move(specs));
}

ParamSpace ParamSpace::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open space file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

void ParamSpace::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write space file: " + path);
  out << to_json_string();
}

std::vector<Violation> validate(const Candidate& c, const ParamSpace& s) {
  std::vector<Violation> out;
  std::set<std::string> known;
  for (const auto& spec : s.specs()) {
    known.insert(spec.name);
    const auto it = c.values.find(spec.name);
    if (it == c.values.end()) {
      out.push_back({spec.name, "missing value"});
      continue;
    }
    const double v = it->second;
    std::ostringstream msg;
    if (!std::isfinite(v)) {
      out.push_back({spec.name, "value is not finite"});
    } else if (v < spec.lower || v > spec.upper) {
      msg << "value " << v << " outside [" << spec.lower << ", " << spec.upper << "]";
      out.push_back({spec.name, msg.str()});
    } else if (spec.kind == ParamKind::Integer && v != std::floor(v)) {
      msg << "value " << v << " is not a whole number";
      out.push_back({spec.name, msg.str()});
    } else if (spec.kind == ParamKind::Binary && v != 0.0 && v != 1.0) {
      msg << "value " << v << " is not 0 or 1";
      out.push_back({spec.name, msg.str()});
    }
  }
  for (const auto& [name, v] : c.values) {
    (void)v;
    if (!known.contains(name)) out.push_back({name, "not a parameter of the space"});
  }
  return out;
}

std::vector<double> encode(const Candidate& c, const ParamSpace& s) {
  if (const auto bad = validate(c, s); !bad.empty())
    throw std::invalid_argument("cannot encode invalid candidate (" + bad.front().name +
                                ": " + bad.front().message + ")");
  std::vector<double> u(s.dimension());
  for (std::size_t i = 0; i < s.dimension(); ++i) {
    const auto& spec = s.spec(i);
    u[i] = (c.values.at(spec.name) - spec.lower) / (spec.upper - spec.lower);
  }
  return u;
}

Candidate decode(std::span<const double> u, const ParamSpace& s) {
  if (u.size() != s.dimension())
    throw std::invalid_argument("encoded vector has wrong dimension");
  Candidate c;
  for (std::size_t i = 0; i < s.dimension(); ++i) {
    const auto& spec = s.spec(i);
    const double ui = u[i];
    if (!(ui >= 0.0 && ui <= 1.0))
      throw std::invalid_argument("encoded component outside [0,1] for " + spec.name);
    double v = spec.lower + ui * (spec.upper - spec.lower);
    switch (spec.kind) {
      case ParamKind::Continuous: break;
      case ParamKind::Integer:
        v = std::floor(v + 0.5);  // round half up
        v = std::min(std::max(v, spec.lower), spec.upper);
        break;
      case ParamKind::Binary: v = ui >= 0.5 ? 1.0 : 0.0; break;
    }
    c.values[spec.name] = v;
  }
  return c;
}

std::vector<Candidate> initial_design(const ParamSpace& s, std::size_t n,
                                      std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("initial design needs at least one point");
  LowDiscSequence seq(s.dimension(), derive_seed(seed, 0x1d5ULL));
  std::vector<Candidate> out;
  out.reserve(n);
  std::vector<double> u(s.dimension());
  for (std::size_t i = 0; i < n; ++i) {
    seq.next(u.data());
    out.push_back(decode(u, s));
  }
  return out;
}

std::size_t default_initial_count(const ParamSpace& s) {
  return std::max<std::size_t>(2 * s.dimension(), 8);
}

}  // namespace nebo
