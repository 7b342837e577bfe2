// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// The `<action> if <condition>` rule language.
//
//   rule      := [ '[' NAME ']' ] action 'if' or_expr
//   action    := 'alert' | 'stop' | 'refuse' | 'override' STRING
//   or_expr   := and_expr ( 'OR' and_expr )*
//   and_expr  := not_expr ( 'AND' not_expr )*
//   not_expr  := 'NOT' not_expr | primary
//   primary   := CE_NAME | '(' or_expr ')'
//
// Keywords are case-insensitive and reserved. `refuse` is an alias of `stop`.
// docs/FORMATS.md has the full lexical grammar.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cerule/common/error.hpp"
#include "cerule/rules/predicate.hpp"
#include "cerule/rules/vocabulary.hpp"

namespace cerule {

enum class ActionKind : std::uint8_t { kAlert, kStop, kOverride };

struct Action {
  ActionKind kind = ActionKind::kAlert;
  std::string scripted_text;  // nonempty iff kOverride

  static Action alert() { return {ActionKind::kAlert, {}}; }
  static Action stop() { return {ActionKind::kStop, {}}; }
  static Action override_with(std::string text) { return {ActionKind::kOverride, std::move(text)}; }

  bool operator==(const Action&) const = default;
};

std::string_view action_keyword(ActionKind kind);

struct Rule {
  std::string name;
  Predicate predicate;
  Action action;

  bool operator==(const Rule&) const = default;
};

/// Position-anchored parse failure. Lines and columns are 1-based; `length`
/// is the width of the offending token (0 at end of input).
struct Diagnostic {
  Errc code = Errc::kSyntax;
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t length = 0;
  std::string message;

  std::string to_string() const;
};

class RuleError : public Error {
 public:
  explicit RuleError(Diagnostic diag)
      : Error(diag.code, diag.to_string()), diag_(std::move(diag)) {}
  const Diagnostic& diagnostic() const { return diag_; }

 private:
  Diagnostic diag_;
};

/// Parses a single rule. `line` is only used to anchor diagnostics.
Rule parse_rule(std::string_view source, const CeVocabulary& vocab, std::size_t line = 1);

/// Parses a bare condition (no action prefix).
Predicate parse_condition(std::string_view source, const CeVocabulary& vocab,
                          std::size_t line = 1);

/// Canonical single-line form without the `[name]` label, e.g.
/// `alert if behavior:threaten AND topic:taxation`.
std::string print_rule(const Rule& rule, const CeVocabulary& vocab);

/// Canonical form of a condition with the minimal parentheses required by
/// NOT > AND > OR precedence.
std::string print_predicate(const Predicate& p, const CeVocabulary& vocab);

}  // namespace cerule
