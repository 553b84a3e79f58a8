#pragma once

#include "fdsnn/ring.hpp"

#include <cstdint>
#include <random>

namespace fdsnn {

// Seedable randomness source. Not a CSPRNG: seeds make runs reproducible; unseeded
// construction draws from std::random_device.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  static Rng from_entropy();

  std::uint64_t next() { return eng_(); }
  Coeff uniform(const Modulus& q) { return q.reduce_u(eng_()); }
  int bit() { return static_cast<int>(eng_() >> 63); }
  double uniform01() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng_);
  }
  // Rounded Gaussian with standard deviation sigma; sigma == 0 gives 0.
  std::int64_t gaussian(double sigma);
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace fdsnn
