// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/rules/predicate.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "cerule/common/error.hpp"

namespace cerule {

std::size_t PresenceVector::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

PresenceVector PresenceVector::from_bits(std::span<const bool> bits) {
  PresenceVector v(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) v.set(static_cast<CeId>(i));
  }
  return v;
}

PresenceVector PresenceVector::from_mask(std::uint64_t mask, std::size_t size) {
  PresenceVector v(size);
  for (std::size_t i = 0; i < size && i < 64; ++i) {
    if ((mask >> i) & 1u) v.set(static_cast<CeId>(i));
  }
  return v;
}

Predicate Predicate::leaf(CeId ce) { return Predicate{NodeKind::kLeaf, ce, {}}; }

Predicate Predicate::all_of(std::vector<Predicate> children) {
  return Predicate{NodeKind::kAnd, 0, std::move(children)};
}

Predicate Predicate::any_of(std::vector<Predicate> children) {
  return Predicate{NodeKind::kOr, 0, std::move(children)};
}

Predicate Predicate::negate(Predicate child) {
  Predicate p{NodeKind::kNot, 0, {}};
  p.children.push_back(std::move(child));
  return p;
}

void validate(const Predicate& p, std::size_t num_ces) {
  switch (p.kind) {
    case NodeKind::kLeaf:
      if (p.ce >= num_ces) {
        throw Error(Errc::kUnknownCe, "ce id " + std::to_string(p.ce) +
                                          " not in vocabulary of size " +
                                          std::to_string(num_ces));
      }
      if (!p.children.empty()) throw Error(Errc::kSyntax, "leaf with children");
      return;
    case NodeKind::kAnd:
    case NodeKind::kOr:
      if (p.children.size() < 2) throw Error(Errc::kSyntax, "AND/OR needs at least 2 operands");
      break;
    case NodeKind::kNot:
      if (p.children.size() != 1) throw Error(Errc::kSyntax, "NOT takes exactly 1 operand");
      break;
  }
  for (const auto& c : p.children) validate(c, num_ces);
}

bool evaluate(const Predicate& p, const PresenceVector& presence) {
  switch (p.kind) {
    case NodeKind::kLeaf:
      return presence.test(p.ce);
    case NodeKind::kAnd:
      return std::all_of(p.children.begin(), p.children.end(),
                         [&](const Predicate& c) { return evaluate(c, presence); });
    case NodeKind::kOr:
      return std::any_of(p.children.begin(), p.children.end(),
                         [&](const Predicate& c) { return evaluate(c, presence); });
    case NodeKind::kNot:
      return !evaluate(p.children.front(), presence);
  }
  return false;
}

namespace {

void collect(const Predicate& p, bool through_not, bool positive_only, std::vector<CeId>& out) {
  if (p.kind == NodeKind::kLeaf) {
    if (!positive_only || !through_not) out.push_back(p.ce);
    return;
  }
  bool next = through_not || p.kind == NodeKind::kNot;
  for (const auto& c : p.children) collect(c, next, positive_only, out);
}

std::vector<CeId> sorted_unique(std::vector<CeId> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace

std::vector<CeId> referenced_ces(const Predicate& p) {
  std::vector<CeId> out;
  collect(p, false, false, out);
  return sorted_unique(std::move(out));
}

std::vector<CeId> positive_leaves(const Predicate& p) {
  std::vector<CeId> out;
  collect(p, false, true, out);
  return sorted_unique(std::move(out));
}

bool is_negation_free(const Predicate& p) {
  if (p.kind == NodeKind::kNot) return false;
  return std::all_of(p.children.begin(), p.children.end(),
                     [](const Predicate& c) { return is_negation_free(c); });
}

std::size_t operator_count(const Predicate& p) {
  if (p.kind == NodeKind::kLeaf) return 0;
  // An n-ary AND/OR counts as n-1 binary operators.
  std::size_t n = p.kind == NodeKind::kNot ? 1 : p.children.size() - 1;
  for (const auto& c : p.children) n += operator_count(c);
  return n;
}

std::size_t depth(const Predicate& p) {
  std::size_t d = 0;
  for (const auto& c : p.children) d = std::max(d, depth(c));
  return d + 1;
}

}  // namespace cerule
