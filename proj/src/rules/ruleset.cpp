// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/rules/ruleset.hpp"

#include <unordered_map>

#include "cerule/common/atomic_file.hpp"
#include "cerule/common/text.hpp"

namespace cerule {

namespace {

std::string summarize(const std::vector<Diagnostic>& diags) {
  std::string msg = std::to_string(diags.size()) + " error(s) in rules file";
  for (const auto& d : diags) msg += "\n  " + d.to_string();
  return msg;
}

}  // namespace

const Rule* RuleSet::find(std::string_view name) const {
  for (const auto& r : rules) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::optional<std::size_t> RuleSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (rules[i].name == name) return i;
  }
  return std::nullopt;
}

RuleSetError::RuleSetError(std::vector<Diagnostic> diagnostics)
    : Error(diagnostics.empty() ? Errc::kSyntax : diagnostics.front().code,
            summarize(diagnostics)),
      diags_(std::move(diagnostics)) {}

RuleSet load_ruleset(std::string_view rules_text, CeVocabulary vocab) {
  RuleSet set{std::move(vocab), {}};
  std::vector<Diagnostic> errors;
  std::unordered_map<std::string, std::size_t> seen;  // name -> line

  std::size_t line_no = 0;
  for (auto line : split_lines(rules_text)) {
    ++line_no;
    auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    try {
      auto rule = parse_rule(line, set.vocabulary, line_no);
      if (rule.name.empty()) rule.name = "rule_" + std::to_string(line_no);
      auto [it, fresh] = seen.emplace(rule.name, line_no);
      if (!fresh) {
        errors.push_back({Errc::kDuplicateRule, line_no, 1, 0,
                          "duplicate rule name '" + rule.name + "' (first defined on line " +
                              std::to_string(it->second) + ")"});
        continue;
      }
      set.rules.push_back(std::move(rule));
    } catch (const RuleError& e) {
      errors.push_back(e.diagnostic());
    }
  }
  if (!errors.empty()) throw RuleSetError(std::move(errors));
  return set;
}

RuleSet load_ruleset(std::string_view rules_text, std::string_view vocab_text) {
  return load_ruleset(rules_text, parse_vocabulary(vocab_text));
}

RuleSet load_ruleset_files(const std::filesystem::path& rules_path,
                           const std::filesystem::path& vocab_path) {
  return load_ruleset(read_text_file(rules_path), load_vocabulary(vocab_path));
}

std::string format_ruleset(const RuleSet& set) {
  std::string out;
  for (const auto& r : set.rules) {
    out += "[" + r.name + "] " + print_rule(r, set.vocabulary) + "\n";
  }
  return out;
}

}  // namespace cerule
