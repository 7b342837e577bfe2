// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "cerule/common/error.hpp"
#include "cerule/rules/ruleset.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "test_paths.hpp"

using namespace cerule;

namespace {

const CeVocabulary& default_vocab() {
  static const CeVocabulary v = load_vocabulary(test_data("default.cevocab"));
  return v;
}

CeId id(std::string_view name) { return *default_vocab().find(name); }

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kIo;
}

}  // namespace

TEST_SUITE("rules") {

TEST_CASE("vocabulary manifest") {
  const auto& v = default_vocab();
  CHECK(v.size() == 23);
  CHECK(v[0].name == "directive:buy");
  CHECK(v.find("behavior:threaten").has_value());
  CHECK_FALSE(v.find("topic:nonexistent").has_value());
  CHECK(parse_vocabulary(format_vocabulary(v)) == v);

  CHECK(code_of([] { parse_vocabulary("# nothing here\n"); }) == Errc::kInvalidVocabulary);
  CHECK(code_of([] {
          parse_vocabulary("[ce]\nid = 0\nname = a:b\n[ce]\nid = 1\nname = a:b\n");
        }) == Errc::kInvalidVocabulary);
  CHECK(code_of([] { parse_vocabulary("[ce]\nid = 0\nname = nocategory\n"); }) ==
        Errc::kInvalidVocabulary);
  CHECK(code_of([] { parse_vocabulary("[ce]\nid = 0\nname = a:b\nthreshold = 1.5\n"); }) ==
        Errc::kInvalidVocabulary);
}

TEST_CASE("parse the phishing rule") {
  const auto r = parse_rule(
      "refuse if task:creating_content AND (directive:click OR directive:provide OR "
      "topic:personal_information)",
      default_vocab());
  CHECK(r.action == Action::stop());
  const auto want = Predicate::all_of(
      {Predicate::leaf(id("task:creating_content")),
       Predicate::any_of({Predicate::leaf(id("directive:click")),
                          Predicate::leaf(id("directive:provide")),
                          Predicate::leaf(id("topic:personal_information"))})});
  CHECK(r.predicate == want);
  // One-based ids c8, c2, c6, c20 are 7, 1, 5, 19 here.
  CHECK(id("task:creating_content") == 7);
  CHECK(id("directive:click") == 1);
  CHECK(id("directive:provide") == 5);
  CHECK(id("topic:personal_information") == 19);

  PresenceVector s(23);
  s.set(7);
  s.set(19);
  CHECK(evaluate(r.predicate, s));
  s.set(19, false);
  CHECK_FALSE(evaluate(r.predicate, s));
}

TEST_CASE("single leaf and printing") {
  const auto r = parse_rule("alert if behavior:threaten", default_vocab());
  CHECK(r.action == Action::alert());
  CHECK(r.predicate == Predicate::leaf(id("behavior:threaten")));
  CHECK(id("behavior:threaten") == 11);

  Rule tax{"", Predicate::all_of({Predicate::leaf(id("behavior:threaten")),
                                  Predicate::leaf(id("topic:taxation"))}),
           Action::alert()};
  CHECK(print_rule(tax, default_vocab()) == "alert if behavior:threaten AND topic:taxation");

  const auto neg = Predicate::negate(Predicate::any_of({Predicate::leaf(0), Predicate::leaf(1)}));
  CHECK(print_predicate(neg, default_vocab()) == "NOT (directive:buy OR directive:click)");

  const auto o = parse_rule("override \"Sorry, I can't.\" if topic:taxation", default_vocab());
  CHECK(o.action == Action::override_with("Sorry, I can't."));
  CHECK(parse_rule(print_rule(o, default_vocab()), default_vocab()) == o);
}

TEST_CASE("precedence and associativity") {
  const auto& v = gen::vocabulary(4);
  auto p = parse_condition("topic:ce_0 OR task:ce_1 AND NOT behavior:ce_2", v);
  CHECK(p == Predicate::any_of({Predicate::leaf(0),
                                Predicate::all_of({Predicate::leaf(1),
                                                   Predicate::negate(Predicate::leaf(2))})}));
  // Nested same-kind groups flatten.
  CHECK(parse_condition("topic:ce_0 AND (task:ce_1 AND behavior:ce_2)", v) ==
        parse_condition("topic:ce_0 AND task:ce_1 AND behavior:ce_2", v));
  // Keywords are case-insensitive.
  CHECK(parse_condition("topic:ce_0 and not task:ce_1", v) ==
        parse_condition("topic:ce_0 AND NOT task:ce_1", v));
}

TEST_CASE("parse errors carry positions") {
  const auto& v = default_vocab();
  try {
    parse_rule("alert if (topic:taxation AND behavior:threaten", v, 3);
    FAIL("expected a syntax error");
  } catch (const RuleError& e) {
    CHECK(e.code() == Errc::kSyntax);
    CHECK(e.diagnostic().line == 3);
    CHECK(e.diagnostic().column == 47);
  }
  try {
    parse_rule("alert if topic:taxation AND topic:nonexistent", v);
    FAIL("expected an unknown-CE error");
  } catch (const RuleError& e) {
    CHECK(e.code() == Errc::kUnknownCe);
    CHECK(e.diagnostic().column == 29);
    CHECK(e.diagnostic().length == std::string("topic:nonexistent").size());
  }
  CHECK(code_of([&] { parse_rule("warn if topic:taxation", v); }) == Errc::kUnknownAction);
  CHECK(code_of([&] { parse_rule("alert topic:taxation", v); }) == Errc::kSyntax);
  CHECK(code_of([&] { parse_rule("override if topic:taxation", v); }) == Errc::kSyntax);
  CHECK(code_of([&] { parse_rule("alert if", v); }) == Errc::kSyntax);
  CHECK(code_of([&] { parse_rule("alert if topic:taxation AND", v); }) == Errc::kSyntax);
  CHECK(code_of([&] { parse_rule("alert if topic:taxation )", v); }) == Errc::kSyntax);
  CHECK(code_of([&] { parse_rule("alert if topic:taxation $", v); }) == Errc::kSyntax);
}

TEST_CASE("ruleset files") {
  auto set = load_ruleset_files(test_data("default.rules"), test_data("default.cevocab"));
  CHECK(set.rules.size() == 9);
  CHECK(set.vocabulary.size() == 23);
  REQUIRE(set.find("tax_authority") != nullptr);
  CHECK(set.find("tax_authority")->action == Action::stop());
  CHECK(load_ruleset(format_ruleset(set), set.vocabulary).rules == set.rules);

  auto empty = load_ruleset("", default_vocab());
  CHECK(empty.rules.empty());
  auto comments = load_ruleset("# only a comment\n\n   \n", default_vocab());
  CHECK(comments.rules.empty());

  try {
    load_ruleset("[x] alert if topic:taxation\n\n[y] alert if topic:nonexistent\n[x] stop if task:sql_query\n",
                 default_vocab());
    FAIL("expected errors");
  } catch (const RuleSetError& e) {
    REQUIRE(e.diagnostics().size() == 2);
    CHECK(e.diagnostics()[0].code == Errc::kUnknownCe);
    CHECK(e.diagnostics()[0].line == 3);
    CHECK(e.diagnostics()[1].code == Errc::kDuplicateRule);
    CHECK(e.diagnostics()[1].line == 4);
  }
  // Unlabelled rules are named after their line.
  auto unnamed = load_ruleset("\nalert if topic:taxation\n", default_vocab());
  CHECK(unnamed.rules[0].name == "rule_2");
}

TEST_CASE("predicate evaluation matches the truth-table oracle") {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto p = gen::predicate(rng, 6, 4, 4);
    const auto table = oracle::truth_table(p, 6);
    for (std::uint64_t a = 0; a < 64; ++a) {
      REQUIRE(evaluate(p, PresenceVector::from_mask(a, 6)) == static_cast<bool>(table >> a & 1));
    }
  }
}

TEST_CASE("negation-free predicates are monotone and false on the empty set") {
  Rng rng(12);
  int checked = 0;
  while (checked < 500) {
    const auto p = gen::predicate(rng, 8, 5, 6);
    if (!is_negation_free(p)) continue;
    ++checked;
    CHECK_FALSE(evaluate(p, PresenceVector(8)));
    for (std::uint64_t a = 0; a < 256; ++a) {
      if (!evaluate(p, PresenceVector::from_mask(a, 8))) continue;
      for (unsigned c = 0; c < 8; ++c) {
        REQUIRE(evaluate(p, PresenceVector::from_mask(a | (1u << c), 8)));
      }
    }
  }
}

TEST_CASE("print then parse is the identity on normal-form trees") {
  Rng rng(13);
  const auto v = gen::vocabulary(10);
  for (int i = 0; i < 1000; ++i) {
    const auto r = gen::rule(rng, 10, static_cast<std::size_t>(i));
    auto back = parse_rule(print_rule(r, v), v);
    back.name = r.name;
    REQUIRE(back == r);
    REQUIRE(depth(r.predicate) <= 7);
  }
}

TEST_CASE("nested trees print to their flattened form") {
  const auto v = gen::vocabulary(4);
  const auto nested = Predicate::all_of(
      {Predicate::leaf(0), Predicate::all_of({Predicate::leaf(1), Predicate::leaf(2)})});
  CHECK(parse_condition(print_predicate(nested, v), v) == oracle::normalize(nested));
}

TEST_CASE("validation") {
  CHECK(code_of([] { validate(Predicate::leaf(5), 3); }) == Errc::kUnknownCe);
  CHECK(code_of([] { validate(Predicate{NodeKind::kAnd, 0, {Predicate::leaf(0)}}, 3); }) ==
        Errc::kSyntax);
  CHECK(operator_count(Predicate::negate(Predicate::all_of({Predicate::leaf(0), Predicate::leaf(1)}))) == 2);
}

}  // TEST_SUITE
