#pragma once

#include <cmath>
#include <cstddef>

namespace testing_stats {

// |count/trials - p| within z binomial standard deviations.
inline bool within_sigma(std::size_t count, std::size_t trials, double p, double z = 3.0) {
  const double n = static_cast<double>(trials);
  const double sigma = std::sqrt(p * (1.0 - p) / n);
  return std::abs(static_cast<double>(count) / n - p) <= z * sigma;
}

}  // namespace testing_stats
