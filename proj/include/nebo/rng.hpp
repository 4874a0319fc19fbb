#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nebo {

// splitmix64 finalizer; the basis for all seed derivation so that scheduling
// order can never perturb per-trial randomness.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x1ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

// named sub-streams of a run's master seed
namespace seed_stream {
inline constexpr std::uint64_t kInitialDesign = 0x1;
inline constexpr std::uint64_t kTrial = 0xA;
inline constexpr std::uint64_t kModelFit = 0xB;
inline constexpr std::uint64_t kProposal = 0xD;
inline constexpr std::uint64_t kRandomSearch = 0xE;
}  // namespace seed_stream

// Deterministic double streams. mt19937_64 is pinned down by the standard;
// the library distributions are not, so uniforms and normals are produced
// explicitly (Box-Muller) to keep runs reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t next() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nebo
