// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// Contrastive concept vectors: a linear baseline detector. The direction is
// the difference of class means and the score a plain projection.

#pragma once

#include <span>
#include <vector>

#include "cerule/rules/vocabulary.hpp"
#include "cerule/traces/excitation.hpp"

namespace cerule {

struct ConceptVector {
  CeId ce = 0;
  std::vector<double> direction;
  double threshold = 0;  // midpoint of the projected class means

  /// <direction, r>
  double score(std::span<const float> r) const;
  bool fires(std::span<const float> r) const { return score(r) >= threshold; }
};

/// Throws kEmptySet when either side is empty, kDimensionMismatch on ragged
/// input, kDegenerateDirection when the class means coincide.
ConceptVector fit_concept_vector(std::span<const std::span<const float>> positives,
                                 std::span<const std::span<const float>> negatives, CeId ce = 0);

double score_concept(const ConceptVector& v, std::span<const float> r);

/// One concept vector per CE, fitted one-vs-rest on the final valid token of
/// each segment. CEs without positives or negatives get no vector.
struct LinearProbe {
  std::vector<ConceptVector> vectors;  // indexed by CE; empty direction = unfitted
};

LinearProbe fit_linear_probe(std::span<const ExcitationSegment* const> segments,
                             std::size_t num_labels);

/// One-vs-rest accuracy per CE on final valid tokens (unfitted CEs score 0).
std::vector<double> probe_accuracy(const LinearProbe& probe,
                                   std::span<const ExcitationSegment* const> segments);

}  // namespace cerule
