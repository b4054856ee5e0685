#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace reft {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic RNG wrapper. mt19937_64 has a portable sequence and a
// textual state representation, which the checkpoint format relies on.
// Distribution sampling is implemented by hand because the std::*
// distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : eng_(seed) {}

  // Independent child stream, e.g. one per question for parallel rollouts.
  static Rng stream(uint64_t seed, uint64_t id) {
    return Rng(splitmix64(seed ^ splitmix64(id)));
  }

  uint64_t next() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(eng_() % span);
  }

  // Box-Muller without state caching so the stream stays serializable.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::string serialize() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void deserialize(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace reft
