#include "fdsnn/random.hpp"

#include <cmath>

namespace fdsnn {

Rng Rng::from_entropy() {
  std::random_device rd;
  const std::uint64_t seed = (std::uint64_t(rd()) << 32) ^ rd();
  return Rng(seed);
}

std::int64_t Rng::gaussian(double sigma) {
  if (sigma <= 0.0) return 0;
  const double x = std::normal_distribution<double>(0.0, sigma)(eng_);
  return static_cast<std::int64_t>(std::llround(x));
}

}  // namespace fdsnn
