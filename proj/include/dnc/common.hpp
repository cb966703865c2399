#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace dnc {

using Gene = std::int32_t;
using Genome = std::vector<Gene>;
using Rng = std::mt19937_64;

/// Fitness marker for invalid solutions.
inline constexpr double kInvalidFitness = -std::numeric_limits<double>::infinity();

}  // namespace dnc
