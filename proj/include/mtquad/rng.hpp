#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace mtquad {

/// Seeded random stream. Distributions are created per draw so the engine
/// alone carries all state, which keeps save/restore exact.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform(double lo, double hi) {
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  std::uint64_t next_u64() { return engine_(); }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  /// Independent child stream, derived deterministically from this one.
  Rng split() {
    std::seed_seq seq{engine_(), engine_(), engine_(), engine_()};
    Rng child;
    child.engine_.seed(seq);
    return child;
  }

  std::mt19937_64& engine() { return engine_; }

  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }
  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mtquad
