// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/detector/concept.hpp"

#include "cerule/common/error.hpp"

namespace cerule {

namespace {

std::vector<double> mean_of(std::span<const std::span<const float>> rows, std::size_t dim) {
  std::vector<double> m(dim, 0.0);
  for (const auto& r : rows) {
    if (r.size() != dim) throw Error(Errc::kDimensionMismatch, "activation widths differ");
    for (std::size_t i = 0; i < dim; ++i) m[i] += r[i];
  }
  for (auto& v : m) v /= static_cast<double>(rows.size());
  return m;
}

double project(const std::vector<double>& v, std::span<const double> x) {
  double s = 0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * x[i];
  return s;
}

std::span<const float> final_row(const ExcitationSegment& s) {
  return s.row(s.valid == 0 ? 0 : s.valid - 1);
}

}  // namespace

double ConceptVector::score(std::span<const float> r) const {
  if (r.size() != direction.size()) {
    throw Error(Errc::kDimensionMismatch, "activation width " + std::to_string(r.size()) +
                                              ", concept vector has " +
                                              std::to_string(direction.size()));
  }
  double s = 0;
  for (std::size_t i = 0; i < r.size(); ++i) s += direction[i] * r[i];
  return s;
}

double score_concept(const ConceptVector& v, std::span<const float> r) { return v.score(r); }

ConceptVector fit_concept_vector(std::span<const std::span<const float>> positives,
                                 std::span<const std::span<const float>> negatives, CeId ce) {
  if (positives.empty() || negatives.empty()) {
    throw Error(Errc::kEmptySet, "concept vector needs at least one positive and one negative");
  }
  const std::size_t dim = positives[0].size();
  auto mp = mean_of(positives, dim);
  auto mn = mean_of(negatives, dim);
  ConceptVector v;
  v.ce = ce;
  v.direction.resize(dim);
  bool nonzero = false;
  for (std::size_t i = 0; i < dim; ++i) {
    v.direction[i] = mp[i] - mn[i];
    nonzero = nonzero || v.direction[i] != 0.0;
  }
  if (!nonzero) {
    throw Error(Errc::kDegenerateDirection, "positive and negative means coincide");
  }
  v.threshold = 0.5 * (project(v.direction, mp) + project(v.direction, mn));
  return v;
}

LinearProbe fit_linear_probe(std::span<const ExcitationSegment* const> segments,
                             std::size_t num_labels) {
  LinearProbe probe;
  probe.vectors.resize(num_labels);
  for (std::size_t c = 0; c < num_labels; ++c) {
    std::vector<std::span<const float>> pos, neg;
    for (const auto* s : segments) (s->label == c ? pos : neg).push_back(final_row(*s));
    if (pos.empty() || neg.empty()) continue;
    try {
      probe.vectors[c] = fit_concept_vector(pos, neg, static_cast<CeId>(c));
    } catch (const Error& e) {
      if (e.code() != Errc::kDegenerateDirection) throw;
    }
  }
  return probe;
}

std::vector<double> probe_accuracy(const LinearProbe& probe,
                                   std::span<const ExcitationSegment* const> segments) {
  std::vector<double> acc(probe.vectors.size(), 0.0);
  if (segments.empty()) return acc;
  for (std::size_t c = 0; c < probe.vectors.size(); ++c) {
    const auto& v = probe.vectors[c];
    if (v.direction.empty()) continue;
    std::size_t ok = 0;
    for (const auto* s : segments) {
      if (v.fires(final_row(*s)) == (s->label == c)) ++ok;
    }
    acc[c] = static_cast<double>(ok) / static_cast<double>(segments.size());
  }
  return acc;
}

}  // namespace cerule
