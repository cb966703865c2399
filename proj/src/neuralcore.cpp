#include "dnc/neuralcore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <string>

#include "dnc/errors.hpp"

namespace dnc {

LstmWeights LstmWeights::zeros(Eigen::Index d) {
  return {Matrix::Zero(4 * d, d), Matrix::Zero(4 * d, d), Vector::Zero(4 * d)};
}

PolicyTensors PolicyTensors::zeros(Eigen::Index d, Eigen::Index vocab_size) {
  return {Matrix::Zero(vocab_size, d),
          LstmWeights::zeros(d),
          LstmWeights::zeros(d),
          Matrix::Zero(d, d),
          Matrix::Zero(d, d),
          Vector::Zero(d),
          Vector::Zero(d)};
}

namespace {

template <typename T>
std::span<T> raw(auto& tensor) {
  return {tensor.data(), static_cast<std::size_t>(tensor.size())};
}

template <typename Tensors, typename Span, typename Fn>
void visit(Tensors& t, const Fn& fn) {
  using V = typename Span::element_type;
  fn("embed_table", raw<V>(t.embed_table));
  fn("encoder.input", raw<V>(t.encoder.input));
  fn("encoder.recurrent", raw<V>(t.encoder.recurrent));
  fn("encoder.bias", raw<V>(t.encoder.bias));
  fn("decoder.input", raw<V>(t.decoder.input));
  fn("decoder.recurrent", raw<V>(t.decoder.recurrent));
  fn("decoder.bias", raw<V>(t.decoder.bias));
  fn("attn_ref", raw<V>(t.attn_ref));
  fn("attn_query", raw<V>(t.attn_query));
  fn("attn_v", raw<V>(t.attn_v));
  fn("start_token", raw<V>(t.start_token));
}

}  // namespace

void PolicyTensors::for_each(const std::function<void(std::string_view, std::span<double>)>& fn) {
  visit<PolicyTensors, std::span<double>>(*this, fn);
}

void PolicyTensors::for_each(
    const std::function<void(std::string_view, std::span<const double>)>& fn) const {
  visit<const PolicyTensors, std::span<const double>>(*this, fn);
}

std::size_t PolicyTensors::value_count() const {
  std::size_t n = 0;
  for_each([&](std::string_view, std::span<const double> s) { n += s.size(); });
  return n;
}

PolicyParameters PolicyParameters::random(std::size_t d, std::size_t vocab_size,
                                          std::uint64_t seed) {
  auto params = zeros(d, vocab_size);
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  std::uniform_real_distribution<double> dist(-bound, bound);
  params.tensors_.for_each([&](std::string_view, std::span<double> values) {
    for (auto& v : values) v = dist(rng);
  });
  return params;
}

PolicyParameters PolicyParameters::zeros(std::size_t d, std::size_t vocab_size) {
  if (d == 0 || vocab_size == 0) throw ShapeError("latent dimension and vocabulary must be positive");
  return {d, vocab_size,
          PolicyTensors::zeros(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(vocab_size))};
}

bool PolicyParameters::all_finite() const {
  bool finite = true;
  tensors_.for_each([&](std::string_view, std::span<const double> values) {
    for (double v : values) finite = finite && std::isfinite(v);
  });
  return finite;
}

bool operator==(const PolicyParameters& a, const PolicyParameters& b) {
  if (a.d_ != b.d_ || a.vocab_ != b.vocab_) return false;
  std::vector<std::span<const double>> lhs;
  a.tensors_.for_each([&](std::string_view, std::span<const double> s) { lhs.push_back(s); });
  std::size_t i = 0;
  bool equal = true;
  b.tensors_.for_each([&](std::string_view, std::span<const double> s) {
    const auto& l = lhs[i++];
    // Bitwise comparison; treats identical NaN payloads as equal.
    equal = equal && l.size() == s.size() &&
            std::equal(l.begin(), l.end(), s.begin(), [](double x, double y) {
              return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
            });
  });
  return equal;
}

GradientSet GradientSet::zeros_like(const PolicyParameters& params) {
  return {PolicyTensors::zeros(static_cast<Eigen::Index>(params.d()),
                               static_cast<Eigen::Index>(params.vocab_size()))};
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  std::vector<std::span<const double>> rhs;
  other.tensors.for_each([&](std::string_view, std::span<const double> s) { rhs.push_back(s); });
  std::size_t i = 0;
  tensors.for_each([&](std::string_view name, std::span<double> s) {
    const auto& r = rhs[i++];
    if (r.size() != s.size()) throw ShapeError("gradient shape mismatch in " + std::string(name));
    for (std::size_t k = 0; k < s.size(); ++k) s[k] += r[k];
  });
  return *this;
}

double GradientSet::max_abs() const {
  double m = 0.0;
  tensors.for_each([&](std::string_view, std::span<const double> s) {
    for (double v : s) m = std::max(m, std::abs(v));
  });
  return m;
}

AdamState AdamState::for_parameters(const PolicyParameters& params, double learning_rate,
                                    double beta1, double beta2) {
  const auto d = static_cast<Eigen::Index>(params.d());
  const auto v = static_cast<Eigen::Index>(params.vocab_size());
  AdamState s{PolicyTensors::zeros(d, v), PolicyTensors::zeros(d, v)};
  s.learning_rate = learning_rate;
  s.beta1 = beta1;
  s.beta2 = beta2;
  return s;
}

Vector embed_gene(const PolicyParameters& params, Gene gene) {
  if (gene < 0 || static_cast<std::size_t>(gene) >= params.vocab_size())
    throw EmbeddingRangeError(gene, params.vocab_size());
  return params.tensors().embed_table.row(gene).transpose();
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

LstmState lstm_step(const LstmWeights& weights, const Eigen::Ref<const Vector>& x,
                    const LstmState& state) {
  const Eigen::Index d = weights.recurrent.cols();
  if (weights.input.rows() != 4 * d || weights.recurrent.rows() != 4 * d ||
      weights.bias.size() != 4 * d || weights.input.cols() != x.size() || state.h.size() != d ||
      state.c.size() != d)
    throw ShapeError("lstm_step: shape mismatch");

  const Vector z = weights.input * x + weights.recurrent * state.h + weights.bias;
  LstmState next{Vector(d), Vector(d)};
  for (Eigen::Index k = 0; k < d; ++k) {
    const double in = sigmoid(z[k]);
    const double forget = sigmoid(z[d + k]);
    const double cand = std::tanh(z[2 * d + k]);
    const double out = sigmoid(z[3 * d + k]);
    next.c[k] = forget * state.c[k] + in * cand;
    next.h[k] = out * std::tanh(next.c[k]);
  }
  return next;
}

EncodedParents encode_parents(const PolicyParameters& params, std::span<const Genome> parents) {
  if (parents.size() < 2) throw ShapeError("encode_parents: need at least two parents");
  const std::size_t n = parents.front().size();
  if (n == 0) throw ShapeError("encode_parents: empty genome");
  const auto d = static_cast<Eigen::Index>(params.d());

  EncodedParents out;
  out.summary.resize(static_cast<Eigen::Index>(parents.size()) * d);
  for (std::size_t i = 0; i < parents.size(); ++i) {
    if (parents[i].size() != n) throw ShapeError("encode_parents: genome lengths differ");
    std::vector<LstmState> seq;
    seq.reserve(n);
    LstmState state = LstmState::zeros(d);
    for (Gene g : parents[i]) {
      state = lstm_step(params.tensors().encoder, embed_gene(params, g), state);
      seq.push_back(state);
    }
    out.summary.segment(static_cast<Eigen::Index>(i) * d, d) = state.h;
    out.states.push_back(std::move(seq));
  }
  return out;
}

Vector pointer_scores(const PolicyParameters& params, std::span<const Vector> refs,
                      const Eigen::Ref<const Vector>& query) {
  if (refs.size() < 2) throw ShapeError("pointer_attention: need at least two references");
  const auto& t = params.tensors();
  const Vector q = t.attn_query * query;
  Vector u(static_cast<Eigen::Index>(refs.size()));
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].size() != q.size()) throw ShapeError("pointer_attention: reference size mismatch");
    u[static_cast<Eigen::Index>(i)] = t.attn_v.dot((t.attn_ref * refs[i] + q).array().tanh().matrix());
  }
  return u;
}

Vector log_softmax(const Eigen::Ref<const Vector>& scores) {
  const double top = scores.maxCoeff();
  const double lse = top + std::log((scores.array() - top).exp().sum());
  return (scores.array() - lse).matrix();
}

Vector pointer_attention(const PolicyParameters& params, std::span<const Vector> refs,
                         const Eigen::Ref<const Vector>& query) {
  return log_softmax(pointer_scores(params, refs, query)).array().exp().matrix();
}

void adam_step(PolicyParameters& params, const GradientSet& grads, AdamState& state) {
  std::vector<std::pair<std::string_view, std::span<const double>>> g;
  grads.tensors.for_each(
      [&](std::string_view name, std::span<const double> s) { g.emplace_back(name, s); });
  std::vector<std::span<double>> m, v;
  state.first_moment.for_each([&](std::string_view, std::span<double> s) { m.push_back(s); });
  state.second_moment.for_each([&](std::string_view, std::span<double> s) { v.push_back(s); });

  std::size_t idx = 0;
  params.tensors().for_each([&](std::string_view name, std::span<double> p) {
    if (g[idx].second.size() != p.size() || m[idx].size() != p.size() || v[idx].size() != p.size())
      throw ShapeError("adam_step: shape mismatch in " + std::string(name));
    for (double x : g[idx].second)
      if (!std::isfinite(x))
        throw TrainingDivergenceError("non-finite gradient in tensor " + std::string(name));
    ++idx;
  });

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  idx = 0;
  params.tensors().for_each([&](std::string_view, std::span<double> p) {
    const auto grad = g[idx].second;
    auto mom1 = m[idx];
    auto mom2 = v[idx];
    for (std::size_t k = 0; k < p.size(); ++k) {
      mom1[k] = state.beta1 * mom1[k] + (1.0 - state.beta1) * grad[k];
      mom2[k] = state.beta2 * mom2[k] + (1.0 - state.beta2) * grad[k] * grad[k];
      const double m_hat = mom1[k] / correction1;
      const double v_hat = mom2[k] / correction2;
      p[k] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
    ++idx;
  });
}

}  // namespace dnc
