#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dnc/ga.hpp"
#include "dnc/neuralcore.hpp"
#include "dnc/policy.hpp"

namespace dnc {

class OnePointCrossover final : public CrossoverOperator {
public:
  std::string name() const override { return "one_point"; }
  std::size_t arity() const override { return 2; }
  Genome apply(std::span<const Individual* const> parents, Rng& rng) override;

  /// Child = first[0:cut] ++ second[cut:n].
  static Genome cut(const Genome& first, const Genome& second, std::size_t cut);
};

/// Each gene is copied from one of the m parents with probability 1/m.
class EquiprobableUniformCrossover final : public CrossoverOperator {
public:
  explicit EquiprobableUniformCrossover(std::size_t parents = 2) : parents_(parents) {}

  std::string name() const override {
    return parents_ == 2 ? "equiprobable_uniform" : "multi_parent_uniform";
  }
  std::size_t arity() const override { return parents_; }
  Genome apply(std::span<const Individual* const> parents, Rng& rng) override;

private:
  std::size_t parents_;
};

/// Uniform crossover biased toward the fitter parent.
class AdaptiveUniformCrossover final : public CrossoverOperator {
public:
  std::string name() const override { return "adaptive_uniform"; }
  std::size_t arity() const override { return 2; }
  Genome apply(std::span<const Individual* const> parents, Rng& rng) override;

  /// Probability of inheriting a gene from the first parent.
  static double first_parent_probability(double f1, double f2);
};

struct DncSettings {
  std::size_t latent_dim = 64;
  std::size_t batch_size = 1024;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double epsilon = 0.2;
  ReferenceIndex references = ReferenceIndex::current;
  unsigned threads = 1;
};

/// Maps raw rewards of a batch to loss weights: -inf becomes (min finite - one
/// std of the finite rewards), or 0 when nothing is finite; then z-scores with
/// the population std. A constant batch maps to all zeros.
void normalize_rewards(std::span<CrossoverRecord> records);

/// Learned pointer-network crossover trained online with REINFORCE.
class DncCrossover final : public CrossoverOperator {
public:
  DncCrossover(PolicyParameters params, const DncSettings& settings, std::size_t arity,
               bool training, std::string name);
  DncCrossover(const DncCrossover&) = delete;
  DncCrossover& operator=(const DncCrossover&) = delete;

  std::string name() const override { return name_; }
  std::size_t arity() const override { return arity_; }
  Genome apply(std::span<const Individual* const> parents, Rng& rng) override;

  bool needs_offspring_fitness() const override { return training_; }
  void offspring_evaluated(double fitness) override;
  void end_of_generation() override;

  /// One REINFORCE + Adam update over the whole buffer; clears it. Returns the
  /// surrogate loss. Throws TrainingDivergenceError on a non-finite loss.
  double train_step();

  const PolicyParameters& params() const noexcept { return params_; }
  const AdamState& adam() const noexcept { return adam_; }
  std::span<const CrossoverRecord> buffer() const noexcept { return buffer_; }
  bool training() const noexcept { return training_; }
  std::size_t train_steps() const noexcept { return train_steps_; }
  double epsilon() const noexcept { return settings_.epsilon; }

private:
  const ParentEncoding& encoding_for(const Genome& genome);

  struct GenomeHash {
    std::size_t operator()(const Genome& g) const noexcept;
  };

  PolicyParameters params_;
  DncSettings settings_;
  AdamState adam_;
  std::size_t arity_;
  bool training_;
  std::string name_;
  std::unique_ptr<CompiledPolicy> compiled_;
  std::unordered_map<Genome, ParentEncoding, GenomeHash> cache_;
  std::vector<CrossoverRecord> buffer_;
  bool awaiting_reward_ = false;
  std::size_t train_steps_ = 0;
};

enum class OperatorKind {
  one_point,
  equiprobable_uniform,
  adaptive_uniform,
  multi_parent_uniform,
  dnc,
  dnc_pt,
  dnc_mp,
};

OperatorKind parse_operator_kind(std::string_view text);
std::string_view to_string(OperatorKind kind);
bool is_learned(OperatorKind kind);

struct OperatorSettings {
  DncSettings dnc;
  std::optional<std::filesystem::path> weights;  // required for dnc_pt
  std::size_t gene_range = 0;                     // vocabulary needed by the problem
  std::uint64_t init_seed = 0;                    // parameter init for dnc / dnc_mp
};

std::unique_ptr<CrossoverOperator> make_operator(OperatorKind kind, const OperatorSettings& settings);

}  // namespace dnc
