#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace nebo {

enum class ParamKind { Continuous, Integer, Binary };

std::string to_string(ParamKind kind);
ParamKind param_kind_from_string(const std::string& s);

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::Continuous;
  double lower = 0.0;
  double upper = 1.0;
  std::string note;  // e.g. "log10 of learning rate"
};

// The search domain: an ordered list of parameter specs. The order is the
// canonical encoding order.
class ParamSpace {
 public:
  ParamSpace() = default;
  explicit ParamSpace(std::vector<ParamSpec> specs);  // throws on bad invariants

  std::size_t dimension() const { return specs_.size(); }
  const std::vector<ParamSpec>& specs() const { return specs_; }
  const ParamSpec& spec(std::size_t i) const { return specs_[i]; }

  static ParamSpace load(const std::string& path);
  void save(const std::string& path) const;
  std::string to_json_string() const;
  static ParamSpace from_json_string(const std::string& text);

 private:
  std::vector<ParamSpec> specs_;
};

// A point in the domain. Integers are stored as exact whole reals, binaries
// as 0 or 1.
struct Candidate {
  std::map<std::string, double> values;

  bool operator==(const Candidate&) const = default;
};

struct Violation {
  std::string name;
  std::string message;
};

// Empty result means the candidate satisfies every invariant of the space.
std::vector<Violation> validate(const Candidate& c, const ParamSpace& s);

// Affine map onto the unit hypercube; rejects invalid candidates.
std::vector<double> encode(const Candidate& c, const ParamSpace& s);

// Inverse map: continuous affine, integer round-half-up then clamp, binary
// thresholded at 0.5. Components must lie in [0, 1].
Candidate decode(std::span<const double> u, const ParamSpace& s);

// n points of a seeded scrambled low-discrepancy sequence, decoded into the
// space. Deterministic per seed; every returned candidate validates.
std::vector<Candidate> initial_design(const ParamSpace& s, std::size_t n,
                                      std::uint64_t seed);

// Default number of initial-design points for a space: max(2d, 8).
std::size_t default_initial_count(const ParamSpace& s);

}  // namespace nebo
