#include <doctest.h>

#include <cmath>

#include "dnc/stats.hpp"

using namespace dnc;

TEST_CASE("mean and sample std") {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(mean(v) == 5.0);
  CHECK(sample_std(v) == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(sample_std(std::vector<double>{3.0}) == 0.0);
}

TEST_CASE("permutation test") {
  Rng rng(1);
  const std::vector<double> a{1, 2, 3, 4, 5, 6};
  CHECK(permutation_test(a, a, 10000, rng) >= 0.99);

  const std::vector<double> zeros(20, 0.0), hundreds(20, 100.0);
  CHECK(permutation_test(zeros, hundreds, 10000, rng) <= 2.0 / 10001.0);

  const std::vector<double> x{1.0, 2.5, 3.1, 0.2, 4.4}, y{2.2, 3.3, 5.1, 4.0, 6.3, 2.9};
  Rng r1(42), r2(42);
  CHECK(permutation_test(x, y, 2000, r1) == permutation_test(y, x, 2000, r2));

  const double p = permutation_test(x, y, 2000, rng);
  CHECK((p > 0.0 && p <= 1.0));

  const std::vector<double> bad{kInvalidFitness, 1.0};
  CHECK(permutation_test(bad, x, 100, rng) == 1.0);
}

TEST_CASE("permutation p shrinks as the effect grows") {
  const std::vector<double> base{0.1, 0.4, 0.3, 0.8, 0.5, 0.2};
  double last = 1.1;
  for (double shift : {0.0, 0.2, 0.5, 1.0}) {
    std::vector<double> moved;
    for (double v : base) moved.push_back(v + shift);
    Rng rng(7);
    const double p = permutation_test(base, moved, 4000, rng);
    CHECK(p <= last + 0.02);
    last = p;
  }
}
