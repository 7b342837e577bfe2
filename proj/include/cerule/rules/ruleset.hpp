// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cerule/rules/rule.hpp"
#include "cerule/rules/vocabulary.hpp"

namespace cerule {

/// Immutable after load; safe to share across monitor streams.
struct RuleSet {
  CeVocabulary vocabulary;
  std::vector<Rule> rules;

  const Rule* find(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;
};

/// Every per-line problem found while loading a rules file.
class RuleSetError : public Error {
 public:
  explicit RuleSetError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

 private:
  std::vector<Diagnostic> diags_;
};

/// One rule per line; blank lines and lines starting with `#` are skipped.
/// Unlabelled rules are named `rule_<line>`. Collects all errors before
/// throwing RuleSetError.
RuleSet load_ruleset(std::string_view rules_text, CeVocabulary vocab);
RuleSet load_ruleset(std::string_view rules_text, std::string_view vocab_text);
RuleSet load_ruleset_files(const std::filesystem::path& rules_path,
                           const std::filesystem::path& vocab_path);

/// Inverse of load_ruleset: `[name] <canonical rule>` per line.
std::string format_ruleset(const RuleSet& set);

}  // namespace cerule
