#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace loco::nn {

// Deterministic random source. Wraps std::mt19937_64 but generates all
// variates through fixed arithmetic (no library distributions), so a given
// seed produces the same stream on every platform with the same engine and
// the full state round-trips through serialize()/deserialize().
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // uniform in [0, 1)
  double uniform() { return (raw() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    const int span = hi - lo + 1;
    int v = lo + static_cast<int>(uniform() * span);
    return v > hi ? hi : v;
  }

  // N(0,1) via Box-Muller without the cached partner, so the engine state is
  // the only state.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // splitmix64; used to derive independent child seeds from (seed, salt)
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::string serialize() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void deserialize(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
  }

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace loco::nn
