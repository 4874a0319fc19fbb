#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "nebo/evaluator.hpp"
#include "nebo/param_space.hpp"
#include "nebo/rng.hpp"

using namespace nebo;

namespace {

Candidate candidate_at(const ParamSpace& s, const std::vector<double>& u) {
  return decode(u, s);
}

}  // namespace

TEST_CASE("space invariants are enforced") {
  CHECK_THROWS(ParamSpace({{"a", ParamKind::Continuous, 2.0, 1.0, ""}}));
  CHECK_THROWS(ParamSpace({{"a", ParamKind::Integer, 0.5, 4.0, ""}}));
  CHECK_THROWS(ParamSpace({{"a", ParamKind::Continuous, 0, 1, ""},
                           {"a", ParamKind::Continuous, 0, 1, ""}}));
}

TEST_CASE("validate accepts the in-range reference candidate") {
  const auto& s = camus_unet_space();
  const auto ok = clamped(camus_published_candidate(), s);
  CHECK(validate(ok, s).empty());
  CHECK(validate(camus_ap2_candidate(), s).empty());
  CHECK(validate(camus_ap4_candidate(), s).empty());
}

TEST_CASE("validate flags every out-of-range published field") {
  const auto& s = camus_unet_space();
  const auto bad = validate(camus_published_candidate(), s);
  std::vector<std::string> names;
  for (const auto& v : bad) names.push_back(v.name);
  // batch size 16 against [2,10] plus the fields below the searched ranges
  CHECK(std::count(names.begin(), names.end(), "batch_size") == 1);
  CHECK(std::count(names.begin(), names.end(), "lg_weight_decay") == 1);
  CHECK(std::count(names.begin(), names.end(), "n_filter_3") == 1);
  CHECK(std::count(names.begin(), names.end(), "n_filter_4") == 1);
  CHECK(std::count(names.begin(), names.end(), "n_filter_5") == 1);
  CHECK(names.size() == 5);
}

TEST_CASE("empty candidate reports one violation per missing name") {
  const auto& s = camus_unet_space();
  const auto bad = validate(Candidate{}, s);
  CHECK(bad.size() == s.dimension());
  for (const auto& v : bad) CHECK(v.message == "missing value");
}

TEST_CASE("encode maps bounds and interior points") {
  const auto& s = camus_unet_space();
  auto c = clamped(camus_published_candidate(), s);
  c.values["lg_learning_rate"] = -9.0;
  auto u = encode(c, s);
  // lg learning rate is dimension 7 in canonical order
  CHECK(s.spec(7).name == "lg_learning_rate");
  CHECK(u[7] == 0.0);

  c.values["lg_learning_rate"] = -6.22;
  u = encode(c, s);
  CHECK(u[7] == doctest::Approx((-6.22 + 9.0) / 11.0).epsilon(1e-15));
  CHECK(u[7] == doctest::Approx(0.25272727272727).epsilon(1e-12));

  c.values["group_vs_batch"] = 1.0;
  u = encode(c, s);
  CHECK(s.spec(5).name == "group_vs_batch");
  CHECK(u[5] == 1.0);
}

TEST_CASE("decode rounds integers half-up and thresholds binaries") {
  const ParamSpace s({{"n", ParamKind::Integer, 16, 32, ""},
                      {"b", ParamKind::Binary, 0, 1, ""}});
  auto c = candidate_at(s, {0.5, 0.7});
  CHECK(c.values["n"] == 24.0);  // round(16 + 0.5*16)
  CHECK(c.values["b"] == 1.0);

  c = candidate_at(s, {0.0, 0.0});
  CHECK(c.values["n"] == 16.0);
  CHECK(c.values["b"] == 0.0);

  CHECK_THROWS(candidate_at(s, {1.2, 0.0}));
  CHECK_THROWS(candidate_at(s, {-0.1, 0.0}));
}

TEST_CASE("round trip decode(encode(c)) is exact for integers and binaries") {
  const auto& s = camus_unet_space();
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> u(s.dimension());
    for (auto& v : u) v = rng.uniform();
    const auto c = decode(u, s);
    const auto back = decode(encode(c, s), s);
    for (const auto& spec : s.specs()) {
      if (spec.kind == ParamKind::Continuous) {
        CHECK(back.values.at(spec.name) ==
              doctest::Approx(c.values.at(spec.name)).epsilon(1e-14));
      } else {
        CHECK(back.values.at(spec.name) == c.values.at(spec.name));
      }
    }
  }
}

TEST_CASE("encoding is monotone per dimension") {
  const auto& s = camus_unet_space();
  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> u(s.dimension());
    for (auto& v : u) v = rng.uniform();
    auto c = decode(u, s);
    const auto base = encode(c, s);
    for (std::size_t i = 0; i < s.dimension(); ++i) {
      const auto& spec = s.spec(i);
      auto c2 = c;
      const double bumped = std::min(c.values[spec.name] + (spec.kind == ParamKind::Continuous ? 0.25 : 1.0),
                                     spec.upper);
      c2.values[spec.name] = spec.kind == ParamKind::Integer ? std::floor(bumped) : bumped;
      const auto u2 = encode(c2, s);
      CHECK(u2[i] >= base[i]);
    }
  }
}

TEST_CASE("initial design is deterministic, valid and space filling") {
  const auto& s = camus_unet_space();
  const auto a = initial_design(s, 8, 42);
  const auto b = initial_design(s, 8, 42);
  CHECK(a == b);
  const auto c = initial_design(s, 8, 43);
  CHECK(a != c);
  for (const auto& cand : a) CHECK(validate(cand, s).empty());
  CHECK_THROWS(initial_design(s, 0, 1));
}

TEST_CASE("initial design coverage spans [0.1, 0.9] per dimension for n >= 2d") {
  // guaranteed for n >= 16 by the base-2 digital structure; d = 10 here
  const auto& s = camus_unet_space();
  const std::size_t n = default_initial_count(s);  // max(2d, 8) = 20
  REQUIRE(n >= 2 * s.dimension());
  for (const std::uint64_t seed : {1ULL, 7ULL, 123ULL, 31337ULL}) {
    const auto cands = initial_design(s, n, seed);
    std::vector<double> lo(s.dimension(), 1.0), hi(s.dimension(), 0.0);
    for (const auto& cand : cands) {
      std::vector<double> u(s.dimension());
      for (std::size_t i = 0; i < s.dimension(); ++i) {
        const auto& spec = s.spec(i);
        u[i] = (cand.values.at(spec.name) - spec.lower) / (spec.upper - spec.lower);
      }
      for (std::size_t i = 0; i < s.dimension(); ++i) {
        lo[i] = std::min(lo[i], u[i]);
        hi[i] = std::max(hi[i], u[i]);
      }
    }
    for (std::size_t i = 0; i < s.dimension(); ++i) {
      CAPTURE(i);
      CHECK(lo[i] <= 0.1);
      CHECK(hi[i] >= 0.9);
    }
  }
}

TEST_CASE("space files round trip") {
  const auto& s = camus_unet_space();
  const auto path = std::filesystem::temp_directory_path() / "nebo_space_test.conf";
  s.save(path.string());
  const auto loaded = ParamSpace::load(path.string());
  REQUIRE(loaded.dimension() == s.dimension());
  for (std::size_t i = 0; i < s.dimension(); ++i) {
    CHECK(loaded.spec(i).name == s.spec(i).name);
    CHECK(loaded.spec(i).kind == s.spec(i).kind);
    CHECK(loaded.spec(i).lower == s.spec(i).lower);
    CHECK(loaded.spec(i).upper == s.spec(i).upper);
  }
  std::filesystem::remove(path);
}

TEST_CASE("the shipped space file matches the built-in definition") {
  const auto shipped = std::string(NEBO_SOURCE_DIR) + "/spaces/camus_unet.conf";
  const auto loaded = ParamSpace::load(shipped);
  CHECK(loaded.to_json_string() == camus_unet_space().to_json_string());
}
