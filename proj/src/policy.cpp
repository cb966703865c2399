#include "dnc/policy.hpp"

#include <cmath>
#include <functional>
#include <thread>

#include "dnc/errors.hpp"

namespace dnc {

namespace {

using RowVector = Eigen::RowVectorXd;

// Applies the gate nonlinearities to pre-activations `z` and advances (h, c).
// `gates` receives [i, f, g, o] post-activation.
void lstm_cell(const Vector& z, Eigen::Ref<RowVector> h, Eigen::Ref<RowVector> c,
               const Eigen::Ref<const RowVector>& c_prev, double* gates) {
  const Eigen::Index d = h.size();
  for (Eigen::Index k = 0; k < d; ++k) {
    const double in = sigmoid(z[k]);
    const double forget = sigmoid(z[d + k]);
    const double cand = std::tanh(z[2 * d + k]);
    const double out = sigmoid(z[3 * d + k]);
    c[k] = forget * c_prev[k] + in * cand;
    h[k] = out * std::tanh(c[k]);
    if (gates != nullptr) {
      gates[k] = in;
      gates[d + k] = forget;
      gates[2 * d + k] = cand;
      gates[3 * d + k] = out;
    }
  }
}

// Backprop through one cell. Inputs dh, dc are gradients w.r.t. the cell's
// outputs; writes dz (pre-activation gradient) and returns dc_prev in `dc`.
void lstm_cell_backward(const double* gates, const Eigen::Ref<const RowVector>& c,
                        const Eigen::Ref<const RowVector>& c_prev, const RowVector& dh,
                        RowVector& dc, Eigen::Ref<RowVector> dz) {
  const Eigen::Index d = dh.size();
  for (Eigen::Index k = 0; k < d; ++k) {
    const double in = gates[k];
    const double forget = gates[d + k];
    const double cand = gates[2 * d + k];
    const double out = gates[3 * d + k];
    const double tc = std::tanh(c[k]);
    const double dct = dc[k] + dh[k] * out * (1.0 - tc * tc);
    dz[k] = dct * cand * in * (1.0 - in);
    dz[d + k] = dct * c_prev[k] * forget * (1.0 - forget);
    dz[2 * d + k] = dct * in * (1.0 - cand * cand);
    dz[3 * d + k] = dh[k] * tc * out * (1.0 - out);
    dc[k] = dct * forget;
  }
}

}  // namespace

CompiledPolicy::CompiledPolicy(const PolicyParameters& params, ReferenceIndex refs)
    : params_(&params), refs_(refs) {
  const auto& t = params.tensors();
  enc_table_ = t.embed_table * t.encoder.input.transpose();
  enc_table_.rowwise() += t.encoder.bias.transpose();
  dec_table_ = t.embed_table * t.decoder.input.transpose();
  dec_table_.rowwise() += t.decoder.bias.transpose();
  dec_start_ = t.decoder.input * t.start_token + t.decoder.bias;
}

ParentEncoding CompiledPolicy::encode(const Genome& genome, bool keep_gates) const {
  const auto d = static_cast<Eigen::Index>(params_->d());
  const auto n = static_cast<Eigen::Index>(genome.size());
  const auto& t = params_->tensors();
  ParentEncoding enc{Matrix(n, d), Matrix(n, d), Matrix(), Matrix()};
  if (keep_gates) enc.gates.resize(n, 4 * d);

  RowVector zero = RowVector::Zero(d);
  Vector z(4 * d);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Gene g = genome[static_cast<std::size_t>(j)];
    if (g < 0 || static_cast<std::size_t>(g) >= params_->vocab_size())
      throw EmbeddingRangeError(g, params_->vocab_size());
    z = enc_table_.row(g).transpose();
    if (j > 0) z.noalias() += t.encoder.recurrent * enc.hidden.row(j - 1).transpose();
    lstm_cell(z, enc.hidden.row(j), enc.cell.row(j), j > 0 ? enc.cell.row(j - 1) : zero,
              keep_gates ? enc.gates.row(j).data() : nullptr);
  }
  enc.ref_proj = enc.hidden * t.attn_ref.transpose();
  return enc;
}

void CompiledPolicy::check_parents(std::span<const Genome> parents) const {
  if (parents.size() < 2) throw ShapeError("policy needs at least two parents");
  if (parents.size() > 255) throw ShapeError("policy supports at most 255 parents");
  for (const auto& p : parents)
    if (p.size() != parents.front().size() || p.empty())
      throw ShapeError("parent genomes must share one non-zero length");
}

namespace {

using Chooser = std::function<std::pair<std::uint8_t, bool>(std::size_t, const Vector&)>;

struct DecodeTape {
  Matrix hidden;  // (n+1) x d, row 0 is the initial state
  Matrix cell;    // (n+1) x d
  Matrix gates;   // n x 4d
  std::vector<Matrix> activations;  // per step: m x d, tanh(W_ref r_i + W_q q)
  std::vector<Vector> log_probs;    // per step: m
};

// Shared decoder loop. When `tape` is set, every intermediate needed for
// backprop is kept.
Genome decode(const PolicyParameters& params, const Matrix& dec_table, const Vector& dec_start,
              ReferenceIndex ref_index, std::span<const Genome* const> parents,
              std::span<const ParentEncoding* const> enc, const Chooser& choose, DecodeTape* tape) {
  const auto& t = params.tensors();
  const auto d = static_cast<Eigen::Index>(params.d());
  const std::size_t m = parents.size();
  const std::size_t n = parents.front()->size();

  RowVector h = RowVector::Zero(d), c = RowVector::Zero(d);
  for (std::size_t i = 0; i < m; ++i) {
    h += enc[i]->hidden.row(static_cast<Eigen::Index>(n) - 1);
    c += enc[i]->cell.row(static_cast<Eigen::Index>(n) - 1);
  }
  h /= static_cast<double>(m);
  c /= static_cast<double>(m);

  if (tape != nullptr) {
    tape->hidden.resize(static_cast<Eigen::Index>(n) + 1, d);
    tape->cell.resize(static_cast<Eigen::Index>(n) + 1, d);
    tape->gates.resize(static_cast<Eigen::Index>(n), 4 * d);
    tape->hidden.row(0) = h;
    tape->cell.row(0) = c;
    tape->activations.assign(n, Matrix(static_cast<Eigen::Index>(m), d));
    tape->log_probs.assign(n, Vector());
  }

  Genome child(n);
  Vector z(4 * d);
  Vector q(d);
  Vector u(static_cast<Eigen::Index>(m));
  RowVector h_next(d), c_next(d), act(d);
  for (std::size_t j = 0; j < n; ++j) {
    const auto row = static_cast<Eigen::Index>(j);
    if (j == 0)
      z = dec_start;
    else
      z = dec_table.row(child[j - 1]).transpose();
    z.noalias() += t.decoder.recurrent * h.transpose();
    lstm_cell(z, h_next, c_next, c, tape != nullptr ? tape->gates.row(row).data() : nullptr);
    h = h_next;
    c = c_next;
    q.noalias() = t.attn_query * h.transpose();

    for (std::size_t i = 0; i < m; ++i) {
      if (ref_index == ReferenceIndex::current)
        act = (enc[i]->ref_proj.row(row) + q.transpose()).array().tanh();
      else if (j > 0)
        act = (enc[i]->ref_proj.row(row - 1) + q.transpose()).array().tanh();
      else
        act = q.transpose().array().tanh();
      u[static_cast<Eigen::Index>(i)] = act.dot(t.attn_v.transpose());
      if (tape != nullptr) tape->activations[j].row(static_cast<Eigen::Index>(i)) = act;
    }
    Vector logp = log_softmax(u);
    const std::uint8_t choice = choose(j, logp).first;
    child[j] = (*parents[choice])[j];
    if (tape != nullptr) {
      tape->hidden.row(row + 1) = h;
      tape->cell.row(row + 1) = c;
      tape->log_probs[j] = std::move(logp);
    }
  }
  return child;
}

}  // namespace

CompiledPolicy::Sample CompiledPolicy::sample(std::span<const Genome* const> parents,
                                              std::span<const ParentEncoding* const> encodings,
                                              double epsilon, Rng& rng) const {
  if (parents.size() < 2 || parents.size() > 255 || encodings.size() != parents.size())
    throw ShapeError("sample: parent/encoding count mismatch");
  const std::size_t n = parents.front()->size();
  for (const auto* p : parents)
    if (p->size() != n) throw ShapeError("sample: parent genomes differ in length");

  Sample s;
  s.choices.resize(n);
  s.random_step.resize(n);
  s.log_probs.resize(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, parents.size() - 1);
  const Chooser choose = [&](std::size_t j, const Vector& logp) -> std::pair<std::uint8_t, bool> {
    std::size_t choice = 0;
    bool random = false;
    if (epsilon > 0.0 && unit(rng) < epsilon) {
      choice = pick(rng);
      random = true;
    } else {
      double r = unit(rng);
      choice = static_cast<std::size_t>(logp.size()) - 1;
      for (Eigen::Index i = 0; i < logp.size(); ++i) {
        r -= std::exp(logp[i]);
        if (r < 0.0) {
          choice = static_cast<std::size_t>(i);
          break;
        }
      }
    }
    s.choices[j] = static_cast<std::uint8_t>(choice);
    s.random_step[j] = random ? 1 : 0;
    s.log_probs[j] = logp[static_cast<Eigen::Index>(choice)];
    return {static_cast<std::uint8_t>(choice), random};
  };
  s.child = decode(*params_, dec_table_, dec_start_, refs_, parents, encodings, choose,
                           nullptr);
  return s;
}

std::vector<Vector> CompiledPolicy::step_distributions(std::span<const Genome> parents,
                                                       std::span<const std::uint8_t> choices) const {
  check_parents(parents);
  if (choices.size() != parents.front().size()) throw ShapeError("choice sequence length mismatch");
  std::vector<ParentEncoding> enc;
  std::vector<const ParentEncoding*> enc_ptr;
  std::vector<const Genome*> par_ptr;
  enc.reserve(parents.size());
  for (const auto& p : parents) {
    enc.push_back(encode(p));
    par_ptr.push_back(&p);
  }
  for (const auto& e : enc) enc_ptr.push_back(&e);

  std::vector<Vector> dists;
  const Chooser choose = [&](std::size_t j, const Vector& logp) -> std::pair<std::uint8_t, bool> {
    if (choices[j] >= parents.size()) throw ShapeError("choice index exceeds parent count");
    dists.push_back(logp.array().exp().matrix());
    return {choices[j], false};
  };
  decode(*params_, dec_table_, dec_start_, refs_, par_ptr, enc_ptr, choose, nullptr);
  return dists;
}

std::vector<double> CompiledPolicy::choice_log_probs(std::span<const Genome> parents,
                                                     std::span<const std::uint8_t> choices) const {
  check_parents(parents);
  if (choices.size() != parents.front().size()) throw ShapeError("choice sequence length mismatch");
  std::vector<ParentEncoding> enc;
  std::vector<const ParentEncoding*> enc_ptr;
  std::vector<const Genome*> par_ptr;
  enc.reserve(parents.size());
  for (const auto& p : parents) {
    enc.push_back(encode(p));
    par_ptr.push_back(&p);
  }
  for (const auto& e : enc) enc_ptr.push_back(&e);

  std::vector<double> out;
  const Chooser choose = [&](std::size_t j, const Vector& logp) -> std::pair<std::uint8_t, bool> {
    if (choices[j] >= parents.size()) throw ShapeError("choice index exceeds parent count");
    out.push_back(logp[choices[j]]);
    return {choices[j], false};
  };
  decode(*params_, dec_table_, dec_start_, refs_, par_ptr, enc_ptr, choose, nullptr);
  return out;
}

namespace {

// Gradient sink that defers the input-projection terms: per-step gradients
// w.r.t. table rows are summed first and folded into W_in, b and the
// embedding with one matrix product at the end.
struct GradientAccumulator {
  GradientSet& grads;
  Matrix enc_table;  // vocab x 4d
  Matrix dec_table;  // vocab x 4d
  Vector dec_start;  // 4d

  GradientAccumulator(GradientSet& g, Eigen::Index vocab, Eigen::Index d)
      : grads(g),
        enc_table(Matrix::Zero(vocab, 4 * d)),
        dec_table(Matrix::Zero(vocab, 4 * d)),
        dec_start(Vector::Zero(4 * d)) {}

  void finalize(const PolicyParameters& params) {
    const auto& t = params.tensors();
    auto& g = grads.tensors;
    g.encoder.input.noalias() += enc_table.transpose() * t.embed_table;
    g.encoder.bias.noalias() += enc_table.colwise().sum().transpose();
    g.embed_table.noalias() += enc_table * t.encoder.input;

    g.decoder.input.noalias() += dec_table.transpose() * t.embed_table;
    g.decoder.input.noalias() += dec_start * t.start_token.transpose();
    g.decoder.bias.noalias() += dec_table.colwise().sum().transpose() + dec_start;
    g.embed_table.noalias() += dec_table * t.decoder.input;
    g.start_token.noalias() += t.decoder.input.transpose() * dec_start;

    enc_table.setZero();
    dec_table.setZero();
    dec_start.setZero();
  }
};

}  // namespace

namespace detail {

double accumulate_record(const CompiledPolicy& policy, const Matrix& dec_table,
                         const Vector& dec_start, const CrossoverRecord& record, double weight,
                         GradientAccumulator& acc);

}  // namespace detail

double CompiledPolicy::accumulate_gradients(const CrossoverRecord& record, double weight,
                                            GradientSet& grads) const {
  GradientAccumulator acc(grads, static_cast<Eigen::Index>(params_->vocab_size()),
                          static_cast<Eigen::Index>(params_->d()));
  const double loss = detail::accumulate_record(*this, dec_table_, dec_start_, record, weight, acc);
  acc.finalize(*params_);
  return loss;
}

namespace detail {

double accumulate_record(const CompiledPolicy& policy, const Matrix& dec_table,
                         const Vector& dec_start, const CrossoverRecord& record, double weight,
                         GradientAccumulator& acc) {
  const auto& params = policy.params();
  const auto& t = params.tensors();
  auto& g = acc.grads.tensors;
  const auto d = static_cast<Eigen::Index>(params.d());
  const std::size_t m = record.parents.size();
  if (m < 2) throw ShapeError("record needs at least two parents");
  const std::size_t n = record.parents.front().size();
  if (record.choices.size() != n || record.random_step.size() != n)
    throw ShapeError("record choice/flag length mismatch");
  const auto nn = static_cast<Eigen::Index>(n);

  // Forward with tapes.
  std::vector<ParentEncoding> enc;
  std::vector<const ParentEncoding*> enc_ptr;
  std::vector<const Genome*> par_ptr;
  enc.reserve(m);
  for (const auto& p : record.parents) {
    if (p.size() != n) throw ShapeError("record parents differ in length");
    enc.push_back(policy.encode(p, true));
    par_ptr.push_back(&p);
  }
  for (const auto& e : enc) enc_ptr.push_back(&e);

  DecodeTape tape;
  const Chooser choose = [&](std::size_t j, const Vector&) -> std::pair<std::uint8_t, bool> {
    if (record.choices[j] >= m) throw ShapeError("choice index exceeds parent count");
    return {record.choices[j], false};
  };
  const Genome child = decode(params, dec_table, dec_start, policy.reference_index(),
                                      par_ptr, enc_ptr, choose, &tape);

  double loss = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    if (!record.random_step[j]) loss -= weight * tape.log_probs[j][record.choices[j]];
  if (weight == 0.0) return loss;

  // Attention backward. dz_att[i] rows are gradients w.r.t. the pre-tanh sum
  // W_ref r_ij + W_q q_j.
  std::vector<Matrix> dz_att(m, Matrix::Zero(nn, d));
  Matrix dz_query = Matrix::Zero(nn, d);
  for (std::size_t j = 0; j < n; ++j) {
    if (record.random_step[j]) continue;
    const Vector p = tape.log_probs[j].array().exp();
    for (std::size_t i = 0; i < m; ++i) {
      const double du = weight * (p[static_cast<Eigen::Index>(i)] - (i == record.choices[j] ? 1.0 : 0.0));
      const auto act = tape.activations[j].row(static_cast<Eigen::Index>(i));
      g.attn_v.noalias() += du * act.transpose();
      const RowVector dz = du * t.attn_v.transpose().array() * (1.0 - act.array().square());
      dz_att[i].row(static_cast<Eigen::Index>(j)) = dz;
      dz_query.row(static_cast<Eigen::Index>(j)) += dz;
    }
  }
  // Queries are decoder hidden rows 1..n.
  g.attn_query.noalias() += dz_query.transpose() * tape.hidden.bottomRows(nn);
  Matrix dh_dec = dz_query * t.attn_query;  // n x d

  // Reference gradients, aligned to encoder positions.
  std::vector<Matrix> dh_enc(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (policy.reference_index() == ReferenceIndex::current) {
      g.attn_ref.noalias() += dz_att[i].transpose() * enc[i].hidden;
      dh_enc[i] = dz_att[i] * t.attn_ref;
    } else {
      // Step j references position j-1; step 0 references the zero state.
      g.attn_ref.noalias() += dz_att[i].bottomRows(nn - 1).transpose() * enc[i].hidden.topRows(nn - 1);
      dh_enc[i] = Matrix::Zero(nn, d);
      dh_enc[i].topRows(nn - 1) = dz_att[i].bottomRows(nn - 1) * t.attn_ref;
    }
  }

  // Decoder BPTT.
  Matrix dz_dec(nn, 4 * d);
  RowVector dh = RowVector::Zero(d), dc = RowVector::Zero(d);
  for (Eigen::Index j = nn - 1; j >= 0; --j) {
    dh += dh_dec.row(j);
    lstm_cell_backward(tape.gates.row(j).data(), tape.cell.row(j + 1), tape.cell.row(j), dh, dc,
                       dz_dec.row(j));
    dh.noalias() = dz_dec.row(j) * t.decoder.recurrent;
    if (j == 0)
      acc.dec_start += dz_dec.row(0).transpose();
    else
      acc.dec_table.row(child[static_cast<std::size_t>(j) - 1]) += dz_dec.row(j);
  }
  g.decoder.recurrent.noalias() += dz_dec.transpose() * tape.hidden.topRows(nn);
  // dh, dc now hold gradients w.r.t. the decoder initial state (parent mean).
  const RowVector dh_init = dh / static_cast<double>(m);
  const RowVector dc_init = dc / static_cast<double>(m);

  // Encoder BPTT per parent.
  Matrix dz_enc(nn, 4 * d);
  const RowVector zero = RowVector::Zero(d);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& e = enc[i];
    dh = dh_init;
    dc = dc_init;
    for (Eigen::Index j = nn - 1; j >= 0; --j) {
      dh += dh_enc[i].row(j);
      lstm_cell_backward(e.gates.row(j).data(), e.cell.row(j), j > 0 ? e.cell.row(j - 1) : zero, dh,
                         dc, dz_enc.row(j));
      dh.noalias() = dz_enc.row(j) * t.encoder.recurrent;
      acc.enc_table.row(record.parents[i][static_cast<std::size_t>(j)]) += dz_enc.row(j);
    }
    if (nn > 1) g.encoder.recurrent.noalias() += dz_enc.bottomRows(nn - 1).transpose() * e.hidden.topRows(nn - 1);
  }
  return loss;
}

}  // namespace detail

double surrogate_loss(const PolicyParameters& params, std::span<const CrossoverRecord> records,
                      ReferenceIndex refs) {
  if (records.empty()) return 0.0;
  const CompiledPolicy policy(params, refs);
  const double scale = 1.0 / static_cast<double>(records.size());
  double loss = 0.0;
  for (const auto& r : records) {
    const auto lp = policy.choice_log_probs(r.parents, r.choices);
    double sum = 0.0;
    for (std::size_t j = 0; j < lp.size(); ++j)
      if (!r.random_step[j]) sum += lp[j];
    loss -= scale * r.normalized_reward * sum;
  }
  return loss;
}

ReinforceResult reinforce_gradients(const PolicyParameters& params,
                                    std::span<const CrossoverRecord> records, ReferenceIndex refs,
                                    unsigned threads) {
  constexpr std::size_t kChunk = 32;
  const CompiledPolicy policy(params, refs);
  const std::size_t chunks = (records.size() + kChunk - 1) / kChunk;
  const double scale = records.empty() ? 0.0 : 1.0 / static_cast<double>(records.size());

  std::vector<GradientSet> chunk_grads(chunks, GradientSet::zeros_like(params));
  std::vector<double> chunk_loss(chunks, 0.0);

  auto work = [&](std::size_t first) {
    for (std::size_t c = first; c < chunks; c += std::max(1u, threads)) {
      GradientAccumulator acc(chunk_grads[c], static_cast<Eigen::Index>(params.vocab_size()),
                              static_cast<Eigen::Index>(params.d()));
      const std::size_t end = std::min(records.size(), (c + 1) * kChunk);
      for (std::size_t r = c * kChunk; r < end; ++r)
        chunk_loss[c] += detail::accumulate_record(policy, policy.decoder_table(), policy.decoder_start(), records[r],
                                                   records[r].normalized_reward * scale, acc);
      acc.finalize(params);
    }
  };
  if (threads <= 1 || chunks <= 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads && w < chunks; ++w) pool.emplace_back(work, w);
  }

  ReinforceResult out{0.0, GradientSet::zeros_like(params)};
  for (std::size_t c = 0; c < chunks; ++c) {
    out.grads += chunk_grads[c];
    out.loss += chunk_loss[c];
  }
  return out;
}

}  // namespace dnc
