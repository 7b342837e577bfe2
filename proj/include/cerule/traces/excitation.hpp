// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "cerule/rules/vocabulary.hpp"
#include "cerule/traces/activation.hpp"

namespace cerule {

inline constexpr std::size_t kDefaultSegmentLength = 5;

/// Label of a background segment: every CE target is zero.
inline constexpr CeId kNoCe = 0xFFFFFFFFu;

/// Excitation subdirectory holding background (CE-free) responses.
inline constexpr const char* kBackgroundDir = "_background";

/// A fixed-length run of token vectors from one excitation response, labelled
/// with the single CE it was elicited for (or kNoCe for background text).
/// Rows past `valid` are zero padding.
struct ExcitationSegment {
  std::size_t dim = 0;
  std::size_t length = kDefaultSegmentLength;
  std::size_t valid = 0;
  std::vector<float> data;  // length x dim, row-major
  CeId label = 0;

  std::span<const float> row(std::size_t t) const { return {data.data() + t * dim, dim}; }
  std::vector<float> one_hot(std::size_t num_ces) const;
};

/// Cuts a trace into consecutive segments; the last one is zero-padded.
std::vector<ExcitationSegment> segment_trace(const ConversationTrace& trace, CeId label,
                                             std::size_t segment_length = kDefaultSegmentLength);

/// Reads an excitation dataset laid out as `<dir>/<ce name>/*.gat[l]`, plus
/// optional background responses in `<dir>/_background/`. Subdirectories are
/// visited in name order, files in name order. Any other subdirectory not
/// named after a vocabulary entry is kUnknownCe; an empty result is
/// kEmptyDataset.
std::vector<ExcitationSegment> load_excitation_dir(const std::filesystem::path& dir,
                                                   const CeVocabulary& vocab,
                                                   std::size_t segment_length = kDefaultSegmentLength);

/// Writes one trace per list element into `<dir>/<ce name>/NNNNN.gat`
/// (`_background` when ce is kNoCe).
void save_excitation_traces(const std::filesystem::path& dir, const CeVocabulary& vocab,
                            CeId ce, std::span<const ConversationTrace> traces);

}  // namespace cerule
