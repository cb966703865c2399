#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dnc/common.hpp"

namespace dnc {

struct Individual {
  Genome genome;
  double fitness = kInvalidFitness;  // internal, always maximized
};

/// A benchmark problem. Internal fitness is maximized; `reported` converts it
/// to the units a human expects (e.g. a positive color count).
class Problem {
public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t genome_length() const = 0;
  /// Exclusive upper bound on gene values.
  virtual std::size_t gene_range() const = 0;
  virtual double fitness(std::span<const Gene> genome) const = 0;

  virtual bool lower_is_better_reported() const { return false; }
  virtual double reported(double internal_fitness) const { return internal_fitness; }
};

struct GAConfig {
  std::size_t population_size = 100;
  std::size_t generations = 6000;
  std::size_t tournament_k = 5;
  double mutation_prob = 0.01;
  double crossover_prob = 0.5;
  double epsilon = 0.2;
  bool elitism = false;
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

/// Recombination interface. Every operator yields one child per application.
class CrossoverOperator {
public:
  virtual ~CrossoverOperator() = default;

  virtual std::string name() const = 0;
  virtual std::size_t arity() const = 0;
  virtual Genome apply(std::span<const Individual* const> parents, Rng& rng) = 0;

  /// True when the operator wants the fitness of each raw crossover child
  /// (before mutation) through `offspring_evaluated`.
  virtual bool needs_offspring_fitness() const { return false; }
  virtual void offspring_evaluated(double /*fitness*/) {}

  /// Called once after each generation; learned operators train here.
  virtual void end_of_generation() {}
};

using Population = std::vector<Individual>;

Population init_population(const Problem& problem, const GAConfig& config, Rng& rng);

/// Draws k entrants with replacement and returns the index of a fittest one;
/// ties are broken uniformly among tied entrants.
std::size_t tournament_select_index(std::span<const Individual> population, std::size_t k,
                                    Rng& rng);

const Individual& tournament_select(std::span<const Individual> population, std::size_t k,
                                    Rng& rng);

Genome uniform_mutation(Genome genome, double mutation_prob, std::size_t gene_range, Rng& rng);

Population evolve_generation(const Population& population, const Problem& problem,
                             CrossoverOperator& op, const GAConfig& config, Rng& rng);

/// Index of a fittest individual (first on ties).
std::size_t best_index(std::span<const Individual> population);

struct GARun {
  std::vector<double> best_fitness;     // best internal fitness after each generation
  std::vector<double> generation_seconds;  // wall clock of evolve + end-of-generation hook
  Individual best;                       // best individual ever seen
};

struct GAHooks {
  std::function<void(std::size_t generation, const Population&)> on_generation;
};

GARun run_ga(const Problem& problem, CrossoverOperator& op, const GAConfig& config, Rng& rng,
             const GAHooks& hooks = {});

}  // namespace dnc
