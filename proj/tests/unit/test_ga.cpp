#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "../support/stats_helpers.hpp"
#include "dnc/errors.hpp"
#include "dnc/ga.hpp"
#include "dnc/operators.hpp"

using namespace dnc;
using testing_stats::within_sigma;

namespace {

// Sum of genes; handy for checking evaluation.
class SumProblem final : public Problem {
public:
  SumProblem(std::size_t n, std::size_t range) : n_(n), range_(range) {}
  std::string name() const override { return "sum"; }
  std::size_t genome_length() const override { return n_; }
  std::size_t gene_range() const override { return range_; }
  double fitness(std::span<const Gene> g) const override {
    double s = 0;
    for (auto x : g) s += x;
    return s;
  }

private:
  std::size_t n_, range_;
};

// Counts calls and records how many parents each call received.
class SpyOperator final : public CrossoverOperator {
public:
  explicit SpyOperator(std::size_t arity) : arity_(arity) {}
  std::string name() const override { return "spy"; }
  std::size_t arity() const override { return arity_; }
  Genome apply(std::span<const Individual* const> parents, Rng&) override {
    ++calls;
    seen_arity = parents.size();
    return parents.front()->genome;
  }
  void end_of_generation() override { ++generations; }
  std::size_t calls = 0, seen_arity = 0, generations = 0;

private:
  std::size_t arity_;
};

Population with_fitness(std::vector<double> f) {
  Population pop;
  for (std::size_t i = 0; i < f.size(); ++i) pop.push_back({Genome{static_cast<Gene>(i)}, f[i]});
  return pop;
}

}  // namespace

TEST_CASE("GAConfig validation") {
  GAConfig c;
  CHECK_NOTHROW(c.validate());
  c.population_size = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.mutation_prob = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.tournament_k = 101;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("init_population") {
  SumProblem prob(7, 5);
  GAConfig c;
  Rng rng(1);
  const auto pop = init_population(prob, c, rng);
  CHECK(pop.size() == 100);
  for (const auto& ind : pop) {
    CHECK(ind.genome.size() == 7);
    CHECK(ind.fitness == prob.fitness(ind.genome));
    for (auto g : ind.genome) CHECK((g >= 0 && g < 5));
  }
  SumProblem zero(4, 1);
  for (const auto& ind : init_population(zero, c, rng)) CHECK(ind.genome == Genome(4, 0));
  Rng a(33), b(33);
  const auto pa = init_population(prob, c, a), pb = init_population(prob, c, b);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].genome == pb[i].genome);
}

TEST_CASE("tournament selection") {
  Rng rng(7);
  SUBCASE("best wins at the with-replacement rate") {
    const auto pop = with_fitness({1, 2, 3, 4, 5});
    std::size_t wins = 0;
    const std::size_t trials = 10000;
    for (std::size_t t = 0; t < trials; ++t) wins += tournament_select_index(pop, 5, rng) == 4;
    const double p = 1.0 - std::pow(0.8, 5);
    const double sigma = std::sqrt(p * (1 - p) / trials);
    CHECK(static_cast<double>(wins) / trials >= p - 3 * sigma);
    CHECK(within_sigma(wins, trials, p));
  }
  SUBCASE("population of one") {
    const auto pop = with_fitness({-3});
    CHECK(tournament_select_index(pop, 1, rng) == 0);
  }
  SUBCASE("all invalid gives a uniform winner") {
    const auto pop = with_fitness(std::vector<double>(5, kInvalidFitness));
    std::vector<std::size_t> counts(5, 0);
    const std::size_t trials = 10000;
    for (std::size_t t = 0; t < trials; ++t) ++counts[tournament_select_index(pop, 5, rng)];
    for (auto c : counts) CHECK(within_sigma(c, trials, 0.2, 5.0));
  }
  SUBCASE("empty population") {
    Population empty;
    CHECK_THROWS(tournament_select_index(empty, 1, rng));
  }
}

TEST_CASE("uniform mutation") {
  Rng rng(3);
  const Genome g{3, 1, 4, 1, 5};
  CHECK(uniform_mutation(g, 0.0, 10, rng) == g);
  CHECK(uniform_mutation(g, 1.0, 1, rng) == Genome(5, 0));

  const std::size_t n = 200, trials = 10000;
  const Genome zeros(n, 0);
  double total = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto m = uniform_mutation(zeros, 0.01, 1000000, rng);
    total += static_cast<double>(std::count_if(m.begin(), m.end(), [](Gene x) { return x != 0; }));
  }
  // Resampling hits 0 again with probability 1e-6, negligible here.
  const double sigma = std::sqrt(n * 0.01 * 0.99 / trials);
  CHECK(std::abs(total / trials - 2.0) <= 3 * sigma);
}

TEST_CASE("evolve_generation") {
  SumProblem prob(6, 4);
  GAConfig c;
  c.population_size = 30;
  Rng rng(5);
  const auto pop = init_population(prob, c, rng);

  SUBCASE("no crossover and no mutation clones selected parents") {
    c.crossover_prob = 0;
    c.mutation_prob = 0;
    SpyOperator spy(2);
    const auto next = evolve_generation(pop, prob, spy, c, rng);
    CHECK(next.size() == pop.size());
    CHECK(spy.calls == 0);
    for (const auto& ind : next)
      CHECK(std::any_of(pop.begin(), pop.end(), [&](const Individual& p) { return p.genome == ind.genome; }));
  }

  SUBCASE("arity three receives three parents") {
    c.crossover_prob = 1;
    SpyOperator spy(3);
    const auto next = evolve_generation(pop, prob, spy, c, rng);
    CHECK(spy.calls == 30);
    CHECK(spy.seen_arity == 3);
    CHECK(next.size() == 30);
  }

  SUBCASE("elitism keeps the best") {
    c.elitism = true;
    c.crossover_prob = 0;
    c.mutation_prob = 1;
    SpyOperator spy(2);
    const auto next = evolve_generation(pop, prob, spy, c, rng);
    CHECK(next[best_index(next)].fitness >= pop[best_index(pop)].fitness);
  }
}

TEST_CASE("run_ga records history and calls hooks") {
  SumProblem prob(10, 3);
  GAConfig c;
  c.population_size = 20;
  c.generations = 15;
  SpyOperator spy(2);
  Rng rng(8);
  std::size_t hook_calls = 0;
  GAHooks hooks{[&](std::size_t, const Population&) { ++hook_calls; }};
  const auto run = run_ga(prob, spy, c, rng, hooks);
  CHECK(run.best_fitness.size() == 15);
  CHECK(run.generation_seconds.size() == 15);
  CHECK(spy.generations == 15);
  CHECK(hook_calls == 15);
  CHECK(run.best.fitness == prob.fitness(run.best.genome));
  CHECK(run.best.fitness >= *std::max_element(run.best_fitness.begin(), run.best_fitness.end()));
}
