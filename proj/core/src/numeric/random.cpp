#include "tractflow/numeric/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace tractflow {

std::uint64_t Rng::below(std::uint64_t bound) {
  // Rejection keeps the result unbiased for bounds that do not divide 2^64.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % bound;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::int64_t Rng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  constexpr double kChunk = 30.0;
  std::int64_t total = 0;
  while (mean > 0.0) {
    const double lambda = mean > kChunk ? kChunk : mean;
    mean -= lambda;
    double p = std::exp(-lambda);
    double cdf = p;
    const double u = uniform();
    std::int64_t k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      p *= lambda / static_cast<double>(k);
      cdf += p;
    }
    total += k;
  }
  return total;
}

}  // namespace tractflow
