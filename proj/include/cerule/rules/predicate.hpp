// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "cerule/rules/vocabulary.hpp"

namespace cerule {

/// K-bit presence vector s_t: bit c is set when CE c appeared in the window.
class PresenceVector {
 public:
  PresenceVector() = default;
  explicit PresenceVector(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  std::size_t size() const { return size_; }
  bool test(CeId c) const { return (words_[c >> 6] >> (c & 63)) & 1u; }
  void set(CeId c, bool on = true) {
    auto mask = std::uint64_t{1} << (c & 63);
    if (on) {
      words_[c >> 6] |= mask;
    } else {
      words_[c >> 6] &= ~mask;
    }
  }
  void clear() { std::fill(words_.begin(), words_.end(), 0); }
  std::size_t count() const;

  static PresenceVector from_bits(std::span<const bool> bits);
  static PresenceVector from_mask(std::uint64_t mask, std::size_t size);

  bool operator==(const PresenceVector&) const = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

enum class NodeKind : std::uint8_t { kLeaf, kAnd, kOr, kNot };

/// Boolean formula over CE presence. Value type; children are owned.
/// The parser produces flattened trees (no And directly under And, no Or
/// directly under Or), and structural equality compares children in order.
struct Predicate {
  NodeKind kind = NodeKind::kLeaf;
  CeId ce = 0;                       // kLeaf only
  std::vector<Predicate> children;   // kAnd/kOr: >= 2, kNot: exactly 1

  static Predicate leaf(CeId ce);
  static Predicate all_of(std::vector<Predicate> children);
  static Predicate any_of(std::vector<Predicate> children);
  static Predicate negate(Predicate child);

  bool operator==(const Predicate&) const = default;
};

/// Throws kUnknownCe / kSyntax when the tree breaks an invariant for a
/// vocabulary of `num_ces` entries.
void validate(const Predicate& p, std::size_t num_ces);

bool evaluate(const Predicate& p, const PresenceVector& presence);

/// Distinct CE ids referenced anywhere in the tree, ascending.
std::vector<CeId> referenced_ces(const Predicate& p);

/// CE ids of leaves reachable without passing through a NOT.
std::vector<CeId> positive_leaves(const Predicate& p);

bool is_negation_free(const Predicate& p);
std::size_t operator_count(const Predicate& p);
std::size_t depth(const Predicate& p);

}  // namespace cerule
