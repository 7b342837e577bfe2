// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic activations for tests, benchmarks and the end-to-end check.
//
// Each CE c is a unit-variance Gaussian cluster centred at (sep / sqrt 2) e_c,
// so any two cluster means are `sep` apart. Background (CE-free) tokens form
// one more cluster on axis K, the same distance from every CE. A token
// carrying several CEs at once is centred at the sum of their means.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cerule/common/random.hpp"
#include "cerule/monitor/stream_io.hpp"
#include "cerule/rules/ruleset.hpp"
#include "cerule/traces/activation.hpp"
#include "cerule/traces/excitation.hpp"

namespace cerule::synth {

struct ClusterSpace {
  std::size_t dim = 32;
  std::size_t num_ces = 4;
  double separation = 6.0;
  double sigma = 1.0;

  /// Mean of CE c: separation / sqrt(2) on axis c. Requires num_ces < dim.
  double center_scale() const;
  void validate() const;

  /// One token carrying every CE in `ces` (none = background).
  std::vector<float> sample(std::span<const CeId> ces, Rng& rng) const;
};

/// `synth:<letters>` names, e.g. synth:alpha.
CeVocabulary synthetic_vocabulary(std::size_t k);

ActivationConfig synthetic_config(std::size_t dim);

/// `per_ce` segments of `segment_len` tokens for each CE, every token drawn
/// from that CE's cluster, then `background` segments of background tokens
/// labelled kNoCe.
std::vector<ExcitationSegment> excitation_dataset(const ClusterSpace& space, std::size_t per_ce,
                                                  std::size_t segment_len, std::uint64_t seed,
                                                  std::size_t background = 0);

/// A run of `length` tokens starting at `start` that all carry `ces`.
struct Injection {
  std::vector<CeId> ces;
  std::size_t start = 0;
  std::size_t length = 0;
};

/// Background trace of `length` tokens with the injections planted. Tokens
/// are labelled per CE (label_width = num_ces) and named "tok<i>".
ConversationTrace make_trace(const ClusterSpace& space, std::size_t length,
                             std::span<const Injection> injections, Rng& rng);

/// Smallest set of CEs whose presence satisfies `p` (brute force over the
/// referenced CEs; ties go to the lexicographically first set). Empty when
/// nothing satisfies it or when it is satisfied by the empty set.
std::vector<CeId> minimal_witness(const Predicate& p, std::size_t num_ces);

struct CorpusSpec {
  std::size_t positives = 100;  // spread round-robin over the rules
  std::size_t negatives = 100;
  std::size_t length = 40;
  std::size_t run_length = 5;
  /// Fraction of positive traces whose witness CEs share one run. Exactly
  /// round(rate * positives) traces get the overlap.
  double overlap_rate = 0.0;
  std::uint64_t seed = 0;
};

/// Positive traces are categorised by rule and carry that rule's minimal
/// witness as separate runs (or one shared run when overlapping). Negative
/// traces, category "benign", carry a single CE that satisfies no rule on its
/// own, or nothing when no such CE exists. Ground truth covers every rule.
std::vector<ConversationTrace> make_rule_corpus(const ClusterSpace& space, const RuleSet& rules,
                                                const CorpusSpec& spec);

/// Detector-free probabilities for a labelled trace: labelled CEs draw from
/// U[hit_lo, 1], the rest from U[0, miss_hi].
ProbabilityTrace label_probabilities(const ConversationTrace& trace, Rng& rng,
                                     double hit_lo = 0.8, double miss_hi = 0.2);

/// Positions of tokens whose label for `ce` is set.
std::vector<std::uint64_t> labelled_positions(const ConversationTrace& trace, CeId ce);

}  // namespace cerule::synth
