#include "dnc/ga.hpp"

#include <chrono>

#include "dnc/errors.hpp"

namespace dnc {

void GAConfig::validate() const {
  if (population_size < 2) throw ConfigError("population_size must be at least 2");
  if (tournament_k < 1 || tournament_k > population_size)
    throw ConfigError("tournament_k must lie in [1, population_size]");
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
  };
  prob(mutation_prob, "mutation_prob");
  prob(crossover_prob, "crossover_prob");
  prob(epsilon, "epsilon");
}

Population init_population(const Problem& problem, const GAConfig& config, Rng& rng) {
  config.validate();
  const std::size_t range = problem.gene_range();
  if (range == 0) throw ConfigError("problem has an empty gene range");
  std::uniform_int_distribution<Gene> gene(0, static_cast<Gene>(range - 1));
  Population pop(config.population_size);
  for (auto& ind : pop) {
    ind.genome.resize(problem.genome_length());
    for (auto& g : ind.genome) g = gene(rng);
    ind.fitness = problem.fitness(ind.genome);
  }
  return pop;
}

std::size_t tournament_select_index(std::span<const Individual> population, std::size_t k,
                                    Rng& rng) {
  if (population.empty()) throw ConfigError("tournament on an empty population");
  if (k == 0) throw ConfigError("tournament size must be positive");
  std::uniform_int_distribution<std::size_t> pick(0, population.size() - 1);
  std::vector<std::size_t> tied;
  tied.reserve(k);
  double top = 0.0;
  for (std::size_t draw = 0; draw < k; ++draw) {
    const std::size_t idx = pick(rng);
    const double f = population[idx].fitness;
    if (tied.empty() || f > top) {
      tied.assign(1, idx);
      top = f;
    } else if (f == top) {
      tied.push_back(idx);
    }
  }
  if (tied.size() == 1) return tied.front();
  std::uniform_int_distribution<std::size_t> tie(0, tied.size() - 1);
  return tied[tie(rng)];
}

const Individual& tournament_select(std::span<const Individual> population, std::size_t k,
                                    Rng& rng) {
  return population[tournament_select_index(population, k, rng)];
}

Genome uniform_mutation(Genome genome, double mutation_prob, std::size_t gene_range, Rng& rng) {
  if (mutation_prob <= 0.0) return genome;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<Gene> gene(0, static_cast<Gene>(gene_range - 1));
  for (auto& g : genome)
    if (unit(rng) < mutation_prob) g = gene(rng);
  return genome;
}

std::size_t best_index(std::span<const Individual> population) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < population.size(); ++i)
    if (population[i].fitness > population[best].fitness) best = i;
  return best;
}

Population evolve_generation(const Population& population, const Problem& problem,
                             CrossoverOperator& op, const GAConfig& config, Rng& rng) {
  const std::size_t m = op.arity();
  if (m < 2) throw ConfigError("crossover arity must be at least 2");
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Population next;
  next.reserve(config.population_size);
  if (config.elitism) next.push_back(population[best_index(population)]);

  std::vector<const Individual*> parents(m);
  while (next.size() < config.population_size) {
    for (auto& p : parents) p = &tournament_select(population, config.tournament_k, rng);

    Individual child;
    if (unit(rng) < config.crossover_prob) {
      Genome raw = op.apply(parents, rng);
      if (raw.size() != problem.genome_length())
        throw ShapeError(op.name() + " returned a genome of the wrong length");
      double raw_fitness = kInvalidFitness;
      if (op.needs_offspring_fitness()) {
        raw_fitness = problem.fitness(raw);
        op.offspring_evaluated(raw_fitness);
      }
      child.genome = uniform_mutation(raw, config.mutation_prob, problem.gene_range(), rng);
      child.fitness = op.needs_offspring_fitness() && child.genome == raw
                          ? raw_fitness
                          : problem.fitness(child.genome);
    } else {
      child.genome =
          uniform_mutation(parents.front()->genome, config.mutation_prob, problem.gene_range(), rng);
      child.fitness = problem.fitness(child.genome);
    }
    next.push_back(std::move(child));
  }
  return next;
}

GARun run_ga(const Problem& problem, CrossoverOperator& op, const GAConfig& config, Rng& rng,
             const GAHooks& hooks) {
  using Clock = std::chrono::steady_clock;
  Population pop = init_population(problem, config, rng);
  GARun run;
  run.best = pop[best_index(pop)];
  run.best_fitness.reserve(config.generations);
  run.generation_seconds.reserve(config.generations);

  for (std::size_t gen = 0; gen < config.generations; ++gen) {
    const auto start = Clock::now();
    pop = evolve_generation(pop, problem, op, config, rng);
    op.end_of_generation();
    run.generation_seconds.push_back(std::chrono::duration<double>(Clock::now() - start).count());

    const auto& best = pop[best_index(pop)];
    run.best_fitness.push_back(best.fitness);
    if (best.fitness > run.best.fitness) run.best = best;
    if (hooks.on_generation) hooks.on_generation(gen, pop);
  }
  return run;
}

}  // namespace dnc
