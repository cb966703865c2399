#include "dnc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dnc/errors.hpp"

namespace dnc {

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mu = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double permutation_test(std::span<const double> a, std::span<const double> b, std::size_t rounds,
                        Rng& rng) {
  if (a.empty() || b.empty()) throw ConfigError("permutation test needs two non-empty samples");
  const double observed = std::abs(mean(a) - mean(b));
  if (!std::isfinite(observed)) return 1.0;

  // Canonical sample order makes the result exactly invariant to swapping a and b.
  std::vector<double> first(a.begin(), a.end()), second(b.begin(), b.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  if (second.size() < first.size() || (second.size() == first.size() && second < first))
    std::swap(first, second);

  std::vector<double> pooled(first);
  pooled.insert(pooled.end(), second.begin(), second.end());
  const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
  const auto na = static_cast<double>(first.size());
  const auto nb = static_cast<double>(second.size());
  // Ties with the observed split must count as hits despite rounding.
  const double threshold = observed - 1e-9 * (1.0 + observed);

  std::size_t hits = 0;
  for (std::size_t r = 0; r < rounds; ++r) {
    std::shuffle(pooled.begin(), pooled.end(), rng);
    const double sum_a = std::accumulate(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(first.size()), 0.0);
    const double diff = std::abs(sum_a / na - (total - sum_a) / nb);
    if (diff >= threshold) ++hits;
  }
  return static_cast<double>(hits + 1) / static_cast<double>(rounds + 1);
}

}  // namespace dnc
