#pragma once

#include <cstddef>
#include <span>

#include "dnc/common.hpp"

namespace dnc {

double mean(std::span<const double> values);

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_std(std::span<const double> values);

/// Two-sided permutation test on |mean(a) - mean(b)| with the add-one
/// estimator p = (hits + 1) / (rounds + 1). Returns 1 when a mean is not finite.
double permutation_test(std::span<const double> a, std::span<const double> b, std::size_t rounds,
                        Rng& rng);

}  // namespace dnc
