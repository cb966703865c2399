#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dnc/common.hpp"
#include "dnc/neuralcore.hpp"

namespace dnc {

/// Which encoder state serves as pointer reference when choosing gene j.
/// `current` points at the states that just consumed the candidate genes;
/// `previous` uses the states one position earlier (zero state at j = 0).
enum class ReferenceIndex { current, previous };

/// One offspring produced by the learned operator, with everything the
/// policy-gradient update needs.
struct CrossoverRecord {
  std::vector<Genome> parents;
  std::vector<std::uint8_t> choices;      // parent index per gene
  std::vector<std::uint8_t> random_step;  // 1 when the epsilon branch picked the parent
  std::vector<double> log_probs;          // log pi(choice) per gene, epsilon steps included
  Genome child;
  double reward = 0.0;             // raw internal fitness, may be -inf
  double normalized_reward = 0.0;  // what enters the loss
  bool rewarded = false;
};

/// Encoder output for one parent sequence. Rows are positions.
struct ParentEncoding {
  Matrix hidden;     // n x d
  Matrix cell;       // n x d
  Matrix ref_proj;   // n x d, rows are (W_ref h_j)^T
  Matrix gates;      // n x 4d post-activation gates, only filled for backprop
};

/// Forward-pass helper bound to one parameter snapshot. Input projections of
/// every gene value are tabulated once, so each LSTM step costs one
/// recurrent mat-vec. Must be rebuilt after the parameters change.
class CompiledPolicy {
public:
  explicit CompiledPolicy(const PolicyParameters& params,
                          ReferenceIndex refs = ReferenceIndex::current);

  const PolicyParameters& params() const noexcept { return *params_; }
  ReferenceIndex reference_index() const noexcept { return refs_; }

  ParentEncoding encode(const Genome& genome, bool keep_gates = false) const;

  struct Sample {
    Genome child;
    std::vector<std::uint8_t> choices;
    std::vector<std::uint8_t> random_step;
    std::vector<double> log_probs;
  };

  /// Decodes one child. With probability `epsilon` per gene the parent is
  /// drawn uniformly instead of from the pointer distribution.
  Sample sample(std::span<const Genome* const> parents,
                std::span<const ParentEncoding* const> encodings, double epsilon, Rng& rng) const;

  /// Teacher-forced per-step distributions over parents for a fixed choice sequence.
  std::vector<Vector> step_distributions(std::span<const Genome> parents,
                                         std::span<const std::uint8_t> choices) const;

  /// Teacher-forced log pi(choice_j) per step.
  std::vector<double> choice_log_probs(std::span<const Genome> parents,
                                       std::span<const std::uint8_t> choices) const;

  /// Adds d(loss)/d(theta) of loss = -weight * sum_{j not random} log pi(choice_j)
  /// into `grads` and returns the loss contribution.
  double accumulate_gradients(const CrossoverRecord& record, double weight,
                              GradientSet& grads) const;

  const Matrix& decoder_table() const noexcept { return dec_table_; }
  const Vector& decoder_start() const noexcept { return dec_start_; }

private:
  void check_parents(std::span<const Genome> parents) const;

  const PolicyParameters* params_;
  ReferenceIndex refs_;
  Matrix enc_table_;  // vocab x 4d: W_in e(g) + b
  Matrix dec_table_;  // vocab x 4d
  Vector dec_start_;  // 4d: W_in <g> + b
};

/// Mean surrogate REINFORCE loss -(1/B) sum_r R_r sum_{j not random} log pi,
/// evaluated by teacher forcing. Uses `normalized_reward`.
double surrogate_loss(const PolicyParameters& params, std::span<const CrossoverRecord> records,
                      ReferenceIndex refs = ReferenceIndex::current);

struct ReinforceResult {
  double loss;
  GradientSet grads;
};

/// Analytic gradient of surrogate_loss. Records are split into fixed chunks so
/// the sum order, and therefore the result, does not depend on `threads`.
ReinforceResult reinforce_gradients(const PolicyParameters& params,
                                    std::span<const CrossoverRecord> records,
                                    ReferenceIndex refs = ReferenceIndex::current,
                                    unsigned threads = 1);

}  // namespace dnc
