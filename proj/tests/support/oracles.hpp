#pragma once

// Scalar reference implementations used as test oracles. Deliberately plain
// loops over std::vector with no Eigen expressions, so they share no code
// path with the library.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dnc/neuralcore.hpp"
#include "dnc/policy.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double at(const dnc::Matrix& m, long r, long c) { return m.data()[r * m.cols() + c]; }

// One LSTM cell update, every gate written out by hand.
inline void lstm(const dnc::LstmWeights& w, const Vec& x, Vec& h, Vec& c) {
  const long d = static_cast<long>(h.size());
  auto pre = [&](long row) {
    double s = w.bias[row];
    for (long k = 0; k < d; ++k) s += at(w.input, row, k) * x[k];
    for (long k = 0; k < d; ++k) s += at(w.recurrent, row, k) * h[k];
    return s;
  };
  Vec h2(d), c2(d);
  for (long r = 0; r < d; ++r) {
    const double in_gate = sig(pre(r));
    const double forget = sig(pre(d + r));
    const double cand = std::tanh(pre(2 * d + r));
    const double out = sig(pre(3 * d + r));
    c2[r] = forget * c[r] + in_gate * cand;
    h2[r] = out * std::tanh(c2[r]);
  }
  h = h2;
  c = c2;
}

inline Vec row(const dnc::Matrix& m, long r) {
  Vec out(m.cols());
  for (long k = 0; k < m.cols(); ++k) out[k] = at(m, r, k);
  return out;
}

inline Vec vec(const dnc::Vector& v) { return Vec(v.data(), v.data() + v.size()); }

// Additive attention scores over `refs` for one query.
inline Vec scores(const dnc::PolicyTensors& t, const std::vector<Vec>& refs, const Vec& q) {
  const long d = static_cast<long>(q.size());
  Vec u;
  for (const auto& r : refs) {
    double s = 0.0;
    for (long k = 0; k < d; ++k) {
      double a = 0.0;
      for (long l = 0; l < d; ++l) a += at(t.attn_ref, k, l) * r[l] + at(t.attn_query, k, l) * q[l];
      s += t.attn_v[k] * std::tanh(a);
    }
    u.push_back(s);
  }
  return u;
}

inline Vec softmax(const Vec& u) {
  double mx = u[0];
  for (double x : u) mx = std::max(mx, x);
  double z = 0.0;
  for (double x : u) z += std::exp(x - mx);
  Vec p;
  for (double x : u) p.push_back(std::exp(x - mx) / z);
  return p;
}

// Teacher-forced per-step distributions over parents: shared encoder from a
// zero state, decoder starting from the parent-mean final encoder state,
// start token at step 0 and the previous child gene after that.
inline std::vector<Vec> step_distributions(const dnc::PolicyParameters& params,
                                           const std::vector<dnc::Genome>& parents,
                                           const std::vector<std::uint8_t>& choices,
                                           dnc::ReferenceIndex mode = dnc::ReferenceIndex::current) {
  const auto& t = params.tensors();
  const long d = static_cast<long>(params.d());
  const std::size_t m = parents.size(), n = parents[0].size();

  std::vector<std::vector<Vec>> enc_h(m);
  Vec h0(d, 0.0), c0(d, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    Vec h(d, 0.0), c(d, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      lstm(t.encoder, row(t.embed_table, parents[i][j]), h, c);
      enc_h[i].push_back(h);
    }
    for (long k = 0; k < d; ++k) {
      h0[k] += h[k] / static_cast<double>(m);
      c0[k] += c[k] / static_cast<double>(m);
    }
  }

  std::vector<Vec> out;
  Vec h = h0, c = c0;
  for (std::size_t j = 0; j < n; ++j) {
    const Vec x = j == 0 ? vec(t.start_token)
                         : row(t.embed_table, parents[choices[j - 1]][j - 1]);
    lstm(t.decoder, x, h, c);
    std::vector<Vec> refs;
    for (std::size_t i = 0; i < m; ++i) {
      if (mode == dnc::ReferenceIndex::current)
        refs.push_back(enc_h[i][j]);
      else
        refs.push_back(j == 0 ? Vec(d, 0.0) : enc_h[i][j - 1]);
    }
    out.push_back(softmax(scores(t, refs, h)));
  }
  return out;
}

inline double surrogate_loss(const dnc::PolicyParameters& params,
                             std::span<const dnc::CrossoverRecord> records,
                             dnc::ReferenceIndex mode = dnc::ReferenceIndex::current) {
  double total = 0.0;
  for (const auto& r : records) {
    const auto dist = step_distributions(params, r.parents, r.choices, mode);
    double lp = 0.0;
    for (std::size_t j = 0; j < r.choices.size(); ++j)
      if (!r.random_step[j]) lp += std::log(dist[j][r.choices[j]]);
    total += r.normalized_reward * lp;
  }
  return -total / static_cast<double>(records.size());
}

}  // namespace oracle
