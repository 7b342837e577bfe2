// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference implementations used as test oracles. Each one is
// written for clarity over speed and shares no code with the library beyond
// its data types.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cerule/detector/gru.hpp"
#include "cerule/rules/predicate.hpp"

namespace oracle {

using cerule::CeId;
using cerule::NodeKind;
using cerule::Predicate;

// ------------------------------------------------------------ predicates

/// Truth table of `p` over K <= 6 CEs: bit a of the result is the value of
/// p under the assignment whose bit c says whether CE c is present. Computed
/// with whole-table bitwise operations rather than per-assignment recursion.
inline std::uint64_t truth_table(const Predicate& p, std::size_t k) {
  const std::uint64_t all = k == 6 ? ~std::uint64_t{0} : (std::uint64_t{1} << (1u << k)) - 1;
  switch (p.kind) {
    case NodeKind::kLeaf: {
      std::uint64_t t = 0;
      for (std::uint64_t a = 0; a < (1u << k); ++a) {
        if (a >> p.ce & 1) t |= std::uint64_t{1} << a;
      }
      return t;
    }
    case NodeKind::kNot:
      return ~truth_table(p.children[0], k) & all;
    case NodeKind::kAnd: {
      std::uint64_t t = all;
      for (const auto& c : p.children) t &= truth_table(c, k);
      return t;
    }
    case NodeKind::kOr: {
      std::uint64_t t = 0;
      for (const auto& c : p.children) t |= truth_table(c, k);
      return t;
    }
  }
  return 0;
}

/// Value of `p` on one presence mask (any K <= 64).
inline bool eval_mask(const Predicate& p, std::uint64_t mask) {
  switch (p.kind) {
    case NodeKind::kLeaf: return mask >> p.ce & 1;
    case NodeKind::kNot: return !eval_mask(p.children[0], mask);
    case NodeKind::kAnd:
      for (const auto& c : p.children) {
        if (!eval_mask(c, mask)) return false;
      }
      return true;
    case NodeKind::kOr:
      for (const auto& c : p.children) {
        if (eval_mask(c, mask)) return true;
      }
      return false;
  }
  return false;
}

/// Flattens same-kind nesting, the normal form the parser produces.
inline Predicate normalize(const Predicate& p) {
  if (p.kind == NodeKind::kLeaf) return p;
  Predicate out{p.kind, 0, {}};
  for (const auto& c : p.children) {
    Predicate n = normalize(c);
    if (p.kind != NodeKind::kNot && n.kind == p.kind) {
      for (auto& g : n.children) out.children.push_back(std::move(g));
    } else {
      out.children.push_back(std::move(n));
    }
  }
  return out;
}

// ------------------------------------------------------------ monitor

/// S_R straight from its definition: geometric mean as a power of the
/// product, max for OR, complement for NOT.
inline double confidence(const Predicate& p, std::span<const double> probs) {
  switch (p.kind) {
    case NodeKind::kLeaf: return probs[p.ce];
    case NodeKind::kNot: return 1.0 - confidence(p.children[0], probs);
    case NodeKind::kOr: {
      double m = 0;
      for (const auto& c : p.children) m = std::max(m, confidence(c, probs));
      return m;
    }
    case NodeKind::kAnd: {
      long double prod = 1;
      for (const auto& c : p.children) prod *= confidence(c, probs);
      return static_cast<double>(std::pow(prod, 1.0L / static_cast<long double>(p.children.size())));
    }
  }
  return 0;
}

struct OracleFire {
  std::size_t rule;
  std::uint64_t position;
  bool operator==(const OracleFire&) const = default;
};

/// Presence mask at step t, recomputed from scratch over the window.
inline std::uint64_t presence_at(const std::vector<std::vector<float>>& stream, std::size_t t,
                                 std::optional<std::size_t> window,
                                 std::span<const double> thresholds) {
  const std::size_t first = window && *window <= t ? t + 1 - *window : 0;
  std::uint64_t mask = 0;
  for (std::size_t c = 0; c < thresholds.size(); ++c) {
    for (std::size_t tau = first; tau <= t; ++tau) {
      if (stream[tau][c] >= thresholds[c]) {
        mask |= std::uint64_t{1} << c;
        break;
      }
    }
  }
  return mask;
}

/// Edge-triggered fires over a whole stream (positions 0..n-1), recomputing
/// every presence vector from scratch: O(n^2 K).
inline std::vector<OracleFire> fires(const std::vector<Predicate>& rules,
                                     const std::vector<std::vector<float>>& stream,
                                     std::optional<std::size_t> window,
                                     std::span<const double> thresholds) {
  std::vector<OracleFire> out;
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const auto now = presence_at(stream, t, window, thresholds);
    const std::uint64_t before = t == 0 ? 0 : presence_at(stream, t - 1, window, thresholds);
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const bool on = eval_mask(rules[r], now);
      const bool was = t > 0 && eval_mask(rules[r], before);
      if (on && !was) out.push_back({r, t});
    }
  }
  return out;
}

// ------------------------------------------------------------ metrics

/// Mann-Whitney pair count: 2 * (concordant pairs) + (tied pairs), and the
/// denominator 2 * P * N. AUC = num / den.
struct PairCount {
  std::uint64_t num = 0;
  std::uint64_t den = 0;
  double auc() const { return static_cast<double>(num) / static_cast<double>(den); }
};

inline PairCount mann_whitney(std::span<const double> scores, std::span<const bool> labels) {
  PairCount pc;
  std::uint64_t p = 0, n = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    ++p;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      if (scores[i] > scores[j]) pc.num += 2;
      if (scores[i] == scores[j]) pc.num += 1;
    }
  }
  for (bool l : labels) n += l ? 0 : 1;
  pc.den = 2 * p * n;
  return pc;
}

/// Youden J at threshold `theta` (predict positive when score >= theta).
inline double youden_j(std::span<const double> scores, std::span<const bool> labels,
                       double theta) {
  double tp = 0, fp = 0, p = 0, n = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    (labels[i] ? p : n) += 1;
    if (scores[i] >= theta) (labels[i] ? tp : fp) += 1;
  }
  return tp / p - fp / n;
}

/// Exhaustive sweep over every candidate threshold in `grid`; the largest
/// optimal value wins ties.
inline double best_threshold(std::span<const double> scores, std::span<const bool> labels,
                             std::span<const double> grid) {
  double best = grid.front(), best_j = -2;
  for (double g : grid) {
    const double j = youden_j(scores, labels, g);
    if (j > best_j + 1e-15 || (std::abs(j - best_j) <= 1e-15 && g > best)) {
      best = g;
      best_j = j;
    }
  }
  return best;
}

// ------------------------------------------------------------ detector

/// Straight-line GRU forward in double: one token at a time, scalar loops,
/// weights looked up by tensor name. Returns per-token probabilities.
inline std::vector<std::vector<double>> gru_forward(const cerule::GruNetwork<double>& net,
                                                    const std::vector<std::vector<double>>& xs) {
  const auto& a = net.arch();
  const std::size_t h = a.hidden;
  auto tensor = [&](const std::string& name) -> const double* {
    for (const auto& t : net.tensors()) {
      if (t.name == name) return net.params().data() + t.offset;
    }
    return nullptr;
  };
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };

  std::vector<std::vector<double>> state(a.num_layers, std::vector<double>(h, 0.0));
  std::vector<std::vector<double>> out;
  for (const auto& x : xs) {
    std::vector<double> in = x;
    for (std::size_t l = 0; l < a.num_layers; ++l) {
      const std::string p = "gru" + std::to_string(l) + ".";
      const double* wi = tensor(p + "w_ih");
      const double* wh = tensor(p + "w_hh");
      const double* bi = tensor(p + "b_ih");
      const double* bh = tensor(p + "b_hh");
      const std::size_t n_in = in.size();
      const auto& hp = state[l];
      std::vector<double> next(h);
      for (std::size_t j = 0; j < h; ++j) {
        double ir = bi[j], iz = bi[h + j], in_ = bi[2 * h + j];
        for (std::size_t i = 0; i < n_in; ++i) {
          ir += wi[j * n_in + i] * in[i];
          iz += wi[(h + j) * n_in + i] * in[i];
          in_ += wi[(2 * h + j) * n_in + i] * in[i];
        }
        double hr = bh[j], hz = bh[h + j], hn = bh[2 * h + j];
        for (std::size_t i = 0; i < h; ++i) {
          hr += wh[j * h + i] * hp[i];
          hz += wh[(h + j) * h + i] * hp[i];
          hn += wh[(2 * h + j) * h + i] * hp[i];
        }
        const double r = sig(ir + hr);
        const double z = sig(iz + hz);
        const double n = std::tanh(in_ + r * hn);
        next[j] = (1.0 - z) * n + z * hp[j];
      }
      state[l] = next;
      in = next;
    }
    const double* w = tensor("head.w");
    const double* b = tensor("head.b");
    std::vector<double> probs(a.num_labels);
    for (std::size_t k = 0; k < a.num_labels; ++k) {
      double v = b[k];
      for (std::size_t j = 0; j < h; ++j) v += w[k * h + j] * in[j];
      probs[k] = sig(v);
    }
    out.push_back(probs);
  }
  return out;
}

/// Mean BCE over (token, label) of `gru_forward` outputs against a constant
/// target vector, for the selected token indices.
inline double bce(const std::vector<std::vector<double>>& probs, const std::vector<double>& target,
                  const std::vector<std::size_t>& tokens) {
  double s = 0;
  std::size_t n = 0;
  for (std::size_t t : tokens) {
    for (std::size_t k = 0; k < target.size(); ++k) {
      const double p = probs[t][k];
      s -= target[k] * std::log(p) + (1 - target[k]) * std::log(1 - p);
      ++n;
    }
  }
  return s / static_cast<double>(n);
}

}  // namespace oracle
