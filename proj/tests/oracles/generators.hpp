// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// Seeded random generators for property tests.

#pragma once

#include <string>
#include <vector>

#include "cerule/common/random.hpp"
#include "cerule/rules/rule.hpp"
#include "cerule/rules/vocabulary.hpp"

namespace gen {

using cerule::CeId;
using cerule::NodeKind;
using cerule::Predicate;
using cerule::Rng;
using cerule::uniform01;
using cerule::uniform_below;

inline cerule::CeVocabulary vocabulary(std::size_t k) {
  static const char* kCats[] = {"topic", "task", "behavior", "directive"};
  std::vector<cerule::CeEntry> entries;
  for (std::size_t i = 0; i < k; ++i) {
    entries.push_back({static_cast<CeId>(i),
                       std::string(kCats[i % 4]) + ":ce_" + std::to_string(i), "", 0.5});
  }
  return cerule::CeVocabulary(std::move(entries));
}

/// Random predicate in parser normal form: AND/OR nodes never have a child
/// of their own kind. `ops` bounds the number of operator nodes.
inline Predicate predicate_budget(Rng& rng, std::size_t k, std::size_t max_depth, std::size_t& ops,
                                  NodeKind parent = NodeKind::kLeaf) {
  if (max_depth == 0 || ops == 0 || uniform01(rng) < 0.3) {
    return Predicate::leaf(static_cast<CeId>(uniform_below(rng, k)));
  }
  NodeKind kind;
  do {
    kind = static_cast<NodeKind>(1 + uniform_below(rng, 3));
  } while (kind == parent && kind != NodeKind::kNot);
  --ops;
  if (kind == NodeKind::kNot) return Predicate::negate(predicate_budget(rng, k, max_depth - 1, ops, kind));
  std::vector<Predicate> children;
  const std::size_t n = 2 + uniform_below(rng, 2);
  for (std::size_t i = 0; i < n; ++i) children.push_back(predicate_budget(rng, k, max_depth - 1, ops, kind));
  return Predicate{kind, 0, std::move(children)};
}

inline Predicate predicate(Rng& rng, std::size_t k, std::size_t max_depth, std::size_t max_ops) {
  std::size_t ops = max_ops;
  return predicate_budget(rng, k, max_depth, ops);
}

inline std::string scripted_text(Rng& rng) {
  static const char* kWords[] = {"I", "can't", "help", "with", "that", "\"quoted\"", "back\\slash",
                                 "tab\there", "ok."};
  std::string s;
  const std::size_t n = 1 + uniform_below(rng, 5);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += kWords[uniform_below(rng, std::size(kWords))];
  }
  return s;
}

inline cerule::Rule rule(Rng& rng, std::size_t k, std::size_t index) {
  cerule::Rule r;
  r.name = "r" + std::to_string(index);
  r.predicate = predicate(rng, k, 6, 12);
  switch (uniform_below(rng, 3)) {
    case 0: r.action = cerule::Action::alert(); break;
    case 1: r.action = cerule::Action::stop(); break;
    default: r.action = cerule::Action::override_with(scripted_text(rng)); break;
  }
  return r;
}

/// Probability stream with sparse hits: each CE is above 0.5 on roughly
/// `hit_rate` of tokens.
inline std::vector<std::vector<float>> stream(Rng& rng, std::size_t length, std::size_t k,
                                              double hit_rate) {
  std::vector<std::vector<float>> out(length, std::vector<float>(k));
  for (auto& row : out) {
    for (auto& p : row) {
      p = uniform01(rng) < hit_rate ? static_cast<float>(0.5 + 0.5 * uniform01(rng))
                                    : static_cast<float>(0.5 * uniform01(rng));
    }
  }
  return out;
}

}  // namespace gen
