#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dnc/common.hpp"

namespace dnc {

// Row-major so raw storage matches the on-disk tensor layout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// LSTM weight block. Gate rows are stacked as [input, forget, candidate, output],
/// each block `hidden` rows tall.
struct LstmWeights {
  Matrix input;      // 4d x d
  Matrix recurrent;  // 4d x d
  Vector bias;       // 4d

  static LstmWeights zeros(Eigen::Index d);
};

/// Every learnable tensor of the crossover policy. Also used as the gradient
/// carrier and the Adam moment accumulators, so all three stay shape-congruent.
struct PolicyTensors {
  Matrix embed_table;  // vocab x d
  LstmWeights encoder;
  LstmWeights decoder;
  Matrix attn_ref;    // d x d
  Matrix attn_query;  // d x d
  Vector attn_v;      // d
  Vector start_token;  // d

  static PolicyTensors zeros(Eigen::Index d, Eigen::Index vocab_size);

  // Visits tensors in the fixed serialization order.
  void for_each(const std::function<void(std::string_view, std::span<double>)>& fn);
  void for_each(const std::function<void(std::string_view, std::span<const double>)>& fn) const;

  std::size_t value_count() const;
};

class PolicyParameters {
public:
  /// Uniform init in [-1/sqrt(d), 1/sqrt(d)] from a seeded generator.
  static PolicyParameters random(std::size_t d, std::size_t vocab_size, std::uint64_t seed);
  static PolicyParameters zeros(std::size_t d, std::size_t vocab_size);

  std::size_t d() const noexcept { return d_; }
  std::size_t vocab_size() const noexcept { return vocab_; }

  const PolicyTensors& tensors() const noexcept { return tensors_; }
  PolicyTensors& tensors() noexcept { return tensors_; }

  bool all_finite() const;

  friend bool operator==(const PolicyParameters& a, const PolicyParameters& b);

private:
  PolicyParameters(std::size_t d, std::size_t vocab, PolicyTensors t)
      : d_(d), vocab_(vocab), tensors_(std::move(t)) {}

  std::size_t d_;
  std::size_t vocab_;
  PolicyTensors tensors_;
};

struct GradientSet {
  PolicyTensors tensors;

  static GradientSet zeros_like(const PolicyParameters& params);
  GradientSet& operator+=(const GradientSet& other);
  double max_abs() const;
};

struct LstmState {
  Vector h;
  Vector c;

  static LstmState zeros(Eigen::Index d) { return {Vector::Zero(d), Vector::Zero(d)}; }
};

struct AdamState {
  PolicyTensors first_moment;
  PolicyTensors second_moment;
  std::int64_t step = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_parameters(const PolicyParameters& params, double learning_rate = 1e-4,
                                  double beta1 = 0.9, double beta2 = 0.999);
};

Vector embed_gene(const PolicyParameters& params, Gene gene);

double sigmoid(double x);

LstmState lstm_step(const LstmWeights& weights, const Eigen::Ref<const Vector>& x,
                    const LstmState& state);

struct EncodedParents {
  // states[i][j] is the encoder state after consuming gene j of parent i.
  std::vector<std::vector<LstmState>> states;
  // Concatenation of every parent's final hidden state (length m * d).
  Vector summary;
};

/// Runs each parent through the shared encoder LSTM from a zero state.
EncodedParents encode_parents(const PolicyParameters& params, std::span<const Genome> parents);

/// Raw additive-attention scores v . tanh(W_ref r_i + W_q q).
Vector pointer_scores(const PolicyParameters& params, std::span<const Vector> refs,
                      const Eigen::Ref<const Vector>& query);

/// Softmax over pointer_scores.
Vector pointer_attention(const PolicyParameters& params, std::span<const Vector> refs,
                         const Eigen::Ref<const Vector>& query);

/// Numerically stable log-softmax.
Vector log_softmax(const Eigen::Ref<const Vector>& scores);

/// One bias-corrected Adam update. Throws TrainingDivergenceError naming the
/// first tensor that holds a non-finite gradient; parameters are untouched then.
void adam_step(PolicyParameters& params, const GradientSet& grads, AdamState& state);

// Weight file: "DNCW", u32 version, u32 d, u32 vocab_size, then every tensor
// in PolicyTensors::for_each order as row-major little-endian float64.
inline constexpr std::uint32_t kWeightsFormatVersion = 1;

void save_parameters(const PolicyParameters& params, const std::filesystem::path& path);

/// Loads and validates a weight file. When `required_vocab` is given the file
/// must cover at least that many gene values.
PolicyParameters load_parameters(const std::filesystem::path& path,
                                 std::optional<std::size_t> required_vocab = std::nullopt);

}  // namespace dnc
