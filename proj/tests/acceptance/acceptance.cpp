// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, with the pinned
// tolerance and the measured value. Exit status is the number of failures.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cerule/common/random.hpp"
#include "cerule/detector/train.hpp"
#include "cerule/eval/corpus.hpp"
#include "cerule/eval/metrics.hpp"
#include "cerule/monitor/monitor.hpp"
#include "cerule/rules/ruleset.hpp"
#include "cerule/synth/synthetic.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "test_paths.hpp"

using namespace cerule;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int g_failures = 0;

/// `limit_s` of 0 means untimed.
void criterion(const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string timing = fmt("%.2f s", secs);
  if (limit_s > 0) {
    timing += fmt(" (limit %.0f s)", limit_s);
    if (secs > limit_s) o.pass = false;
  }
  if (!o.pass) ++g_failures;
  std::printf("%s  %-22s %s; %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), timing.c_str());
  std::fflush(stdout);
}

// ------------------------------------------------------------ predicates

/// Every binary-shaped predicate over k CEs with exactly `ops` operators.
/// `memo` must already hold a slot for `ops`.
const std::vector<Predicate>& enumerate(std::size_t ops, std::size_t k,
                                        std::vector<std::vector<Predicate>>& memo) {
  auto& out = memo[ops];
  if (!out.empty()) return out;
  if (ops == 0) {
    for (std::size_t c = 0; c < k; ++c) out.push_back(Predicate::leaf(static_cast<CeId>(c)));
    return out;
  }
  for (const auto& p : enumerate(ops - 1, k, memo)) out.push_back(Predicate::negate(p));
  for (std::size_t a = 0; a < ops; ++a) {
    const auto& left = enumerate(a, k, memo);
    const auto& right = enumerate(ops - 1 - a, k, memo);
    for (const auto& l : left) {
      for (const auto& r : right) {
        out.push_back(Predicate::all_of({l, r}));
        out.push_back(Predicate::any_of({l, r}));
      }
    }
  }
  return out;
}

bool matches_truth_table(const Predicate& p, std::size_t k) {
  const auto table = oracle::truth_table(p, k);
  for (std::uint64_t a = 0; a < (std::uint64_t{1} << k); ++a) {
    if (evaluate(p, PresenceVector::from_mask(a, k)) != (((table >> a) & 1) != 0)) return false;
  }
  return true;
}

Outcome predicate_oracle() {
  const std::size_t k = 6;
  std::size_t checked = 0, wrong = 0;
  // Exhaustive over binary shapes up to 3 operators.
  std::vector<std::vector<Predicate>> memo(4);
  for (std::size_t ops = 0; ops <= 3; ++ops) {
    for (const auto& p : enumerate(ops, k, memo)) {
      ++checked;
      wrong += matches_truth_table(p, k) ? 0 : 1;
    }
  }
  // Random n-ary predicates with exactly 4 operators.
  Rng rng(101);
  std::size_t four = 0;
  while (four < 20000) {
    const auto p = gen::predicate(rng, k, 4, 4);
    if (operator_count(p) != 4) continue;
    ++four;
    ++checked;
    wrong += matches_truth_table(p, k) ? 0 : 1;
  }
  return {wrong == 0, fmt("%zu predicates (all binary shapes <= 3 ops, 20000 random with 4), "
                          "%zu mismatches over 64 assignments",
                          checked, wrong)};
}

Outcome dsl_round_trip() {
  // Whole rule files, so names and actions travel with the predicates.
  RuleSet generated{gen::vocabulary(23), {}};
  Rng rng(202);
  for (std::size_t i = 0; i < 1000; ++i) generated.rules.push_back(gen::rule(rng, 23, i));
  const auto once = load_ruleset(format_ruleset(generated), generated.vocabulary);
  const auto twice = load_ruleset(format_ruleset(once), once.vocabulary);
  std::size_t bad = once.rules.size() == 1000 && twice.rules.size() == 1000 ? 0 : 1000;
  for (std::size_t i = 0; bad == 0 && i < 1000; ++i) {
    if (!(once.rules[i] == generated.rules[i]) || !(twice.rules[i] == once.rules[i])) ++bad;
  }
  return {bad == 0, fmt("1000 rules parse/print/parse, %zu structural mismatches", bad)};
}

// ------------------------------------------------------------ detector

Outcome gradient_check() {
  DetectorModel64 net({8, 3, 4, 2, 5});
  init_uniform(net, 21);
  Rng rng(22);
  auto segment = [&](std::size_t valid, CeId label) {
    ExcitationSegment s;
    s.dim = 8;
    s.valid = valid;
    s.label = label;
    s.data.assign(s.length * s.dim, 0.0f);
    for (std::size_t i = 0; i < valid * s.dim; ++i) s.data[i] = static_cast<float>(standard_normal(rng));
    return s;
  };
  const std::vector<ExcitationSegment> batch = {segment(5, 0), segment(3, 1), segment(4, kNoCe)};
  std::vector<const ExcitationSegment*> ptrs;
  for (const auto& s : batch) ptrs.push_back(&s);

  double worst = 0;
  for (LossTarget target : {LossTarget::kAllTokens, LossTarget::kFinalToken}) {
    auto grads = net.zeros_like();
    loss_and_gradients<double>(net, ptrs, target, &grads);
    auto probe = net;
    auto params = probe.params();
    auto loss_at = [&](std::size_t i, double x) {
      params[i] = x;
      return loss_and_gradients<double>(probe, ptrs, target, nullptr);
    };
    const double h = 1e-3;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double keep = params[i];
      const double numeric = (-loss_at(i, keep + 2 * h) + 8 * loss_at(i, keep + h) -
                              8 * loss_at(i, keep - h) + loss_at(i, keep - 2 * h)) /
                             (12 * h);
      params[i] = keep;
      const double analytic = grads.params()[i];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-7});
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
    }
  }
  return {worst < 1e-6 && net.parameter_count() < 1000,
          fmt("%zu params, max relative error %.2e (bound 1e-6)", net.parameter_count(), worst)};
}

// ------------------------------------------------------------ end to end

const char* kSynthRules =
    "[pair_ab] alert if synth:alpha AND synth:beta\n"
    "[pair_cd] stop if synth:gamma AND synth:delta\n";

struct EndToEnd {
  bool trained = false;
  synth::ClusterSpace space{32, 4, 6.0, 1.0};
  RuleSet rules;
  DetectorModel model;
  MonitorConfig config;
};

EndToEnd g_e2e;

Outcome synthetic_end_to_end() {
  auto& e = g_e2e;
  const auto vocab = synth::synthetic_vocabulary(4);
  e.rules = load_ruleset(kSynthRules, vocab);

  const auto data = synth::excitation_dataset(e.space, 300, kDefaultSegmentLength, 1, 300);
  TrainConfig tc;
  tc.seed = 2;
  tc.epochs = 20;
  auto trained = train(data, vocab.names(), tc);
  e.model = std::move(trained.model);
  e.trained = true;

  synth::CorpusSpec cal_spec;
  cal_spec.positives = 200;
  cal_spec.negatives = 200;
  cal_spec.seed = 11;
  const auto cal_traces = synth::make_rule_corpus(e.space, e.rules, cal_spec);
  const auto cal_probs = detect_corpus(e.model, cal_traces);
  const auto cal = calibrate_thresholds(cal_probs, cal_traces, 4);

  e.config = MonitorConfig::from_vocabulary(vocab);
  e.config.thresholds = cal.thresholds();
  synth::CorpusSpec test_spec;
  test_spec.seed = 12;
  const auto test = synth::make_rule_corpus(e.space, e.rules, test_spec);
  const auto rep = eval_corpus(e.rules, e.model, e.config, test);
  const double auc = rep.overall_roc.points.empty() ? 0.0 : rep.overall_roc.auc;
  const bool ok = rep.overall.tpr >= 0.95 && rep.overall.fpr <= 0.02 && auc >= 0.99;
  return {ok, fmt("%zu+%zu traces, %zu epochs: TPR %.3f (>= 0.95), FPR %.3f (<= 0.02), AUC %.4f (>= 0.99)",
                  rep.positives, rep.negatives, trained.report.epochs.size(), rep.overall.tpr,
                  rep.overall.fpr, auc)};
}

// ------------------------------------------------------------ monitor

Outcome geometric_mean() {
  Rng rng(303);
  double worst = 0;
  for (int rep = 0; rep < 20000; ++rep) {
    const std::size_t n = 2 + uniform_below(rng, 7);
    std::vector<Predicate> leaves;
    std::vector<double> probs(n);
    long double product = 1;
    for (std::size_t i = 0; i < n; ++i) {
      leaves.push_back(Predicate::leaf(static_cast<CeId>(i)));
      probs[i] = uniform01(rng);
      product *= probs[i];
    }
    const auto rule = Predicate::all_of(std::move(leaves));
    const double direct = static_cast<double>(std::pow(product, 1.0L / static_cast<long double>(n)));
    worst = std::max(worst, std::abs(rule_confidence(rule, probs) - direct));
  }
  bool annihilator = true, identity = true;
  for (std::size_t n = 2; n <= 8; ++n) {
    std::vector<Predicate> leaves;
    for (std::size_t i = 0; i < n; ++i) leaves.push_back(Predicate::leaf(static_cast<CeId>(i)));
    const auto rule = Predicate::all_of(leaves);
    for (std::size_t z = 0; z < n; ++z) {
      std::vector<double> probs(n);
      for (auto& p : probs) p = 0.01 + 0.99 * uniform01(rng);
      probs[z] = 0.0;
      annihilator = annihilator && rule_confidence(rule, probs) == 0.0;
    }
    const std::vector<double> ones(n, 1.0);
    identity = identity && rule_confidence(rule, ones) == 1.0;
  }
  return {worst <= 1e-12 && annihilator && identity,
          fmt("20000 conjunctions: max |S_R - direct| %.1e (bound 1e-12), zero annihilates: %s, "
              "all ones give 1: %s",
              worst, annihilator ? "yes" : "no", identity ? "yes" : "no")};
}

Outcome window_oracle() {
  const std::size_t k = 6;
  const auto vocab = gen::vocabulary(k);
  Rng rng(404);
  std::size_t mismatches = 0, fire_mismatches = 0;
  for (int s = 0; s < 1000; ++s) {
    std::vector<Rule> rules;
    for (std::size_t i = 0; i < 4; ++i) rules.push_back(gen::rule(rng, k, i));
    for (auto& r : rules) r.action = Action::alert();
    RuleSet set{vocab, rules};
    MonitorConfig cfg = MonitorConfig::from_vocabulary(vocab);
    if (s % 5 != 0) cfg.window = 1 + uniform_below(rng, 40);
    for (auto& t : cfg.thresholds) t = 0.3 + 0.4 * uniform01(rng);
    const auto stream = gen::stream(rng, 200, k, 0.02 + 0.05 * uniform01(rng));

    MonitorState st(set, cfg);
    std::vector<oracle::OracleFire> got;
    for (std::size_t t = 0; t < stream.size(); ++t) {
      auto res = st.ingest(t, stream[t]);
      for (const auto& f : res.fired) got.push_back({f.rule_index, f.position});
      const auto want = oracle::presence_at(stream, t, cfg.window, cfg.thresholds);
      if (!(st.presence() == PresenceVector::from_mask(want, k))) ++mismatches;
    }
    std::vector<Predicate> preds;
    for (const auto& r : rules) preds.push_back(r.predicate);
    if (got != oracle::fires(preds, stream, cfg.window, cfg.thresholds)) ++fire_mismatches;
  }
  return {mismatches == 0 && fire_mismatches == 0,
          fmt("1000 streams x 200 tokens: %zu presence mismatches, %zu streams with differing fires",
              mismatches, fire_mismatches)};
}

Outcome cooccurrence() {
  const auto vocab = synth::synthetic_vocabulary(4);
  const auto rules = load_ruleset(kSynthRules, vocab);
  const synth::ClusterSpace space{32, 4, 6.0, 1.0};
  synth::CorpusSpec spec;
  spec.overlap_rate = 0.54;
  spec.seed = 505;
  const auto corpus = synth::make_rule_corpus(space, rules, spec);
  Rng rng(506);
  std::vector<ProbabilityTrace> probs;
  for (const auto& t : corpus) probs.push_back(synth::label_probabilities(t, rng));
  const auto rep = evaluate_probabilities(rules, MonitorConfig::from_vocabulary(vocab), probs);
  const double got = rep.cooccurrence_fraction;
  std::string detail = fmt("planted 54%%, reported %.1f%% (+-3 points)", 100 * got);
  if (g_e2e.trained) {
    const auto via = eval_corpus(g_e2e.rules, g_e2e.model, g_e2e.config, corpus);
    detail += fmt("; through the trained detector %.1f%% (info)", 100 * via.cooccurrence_fraction);
  }
  return {std::abs(got - 0.54) <= 0.03, detail};
}

Outcome latency() {
  const auto rules = load_ruleset_files(test_data("default.rules"), test_data("default.cevocab"));
  const std::size_t k = rules.vocabulary.size();
  const auto cfg = MonitorConfig::from_vocabulary(rules.vocabulary);
  Rng rng(606);

  ProbabilityTrace probs;
  for (std::uint64_t i = 0; i < 4000; ++i) {
    ProbabilityFrame f{i, "tok", {}};
    for (std::size_t c = 0; c < k; ++c) {
      const double u = uniform01(rng);
      f.p.push_back(static_cast<float>(u * u * u * u));
    }
    probs.frames.push_back(std::move(f));
  }
  const auto mon = bench_latency(rules, cfg, probs, {20, 3});

  DetectorModel model({512, 3, 256, k, kDefaultSegmentLength}, rules.vocabulary.names());
  init_uniform(model, 607);
  ConversationTrace trace;
  trace.config = synth::synthetic_config(512);
  for (std::uint64_t i = 0; i < 200; ++i) {
    TokenActivation a;
    a.position = i;
    for (std::size_t d = 0; d < 512; ++d) a.values.push_back(static_cast<float>(standard_normal(rng)));
    trace.tokens.push_back(std::move(a));
  }
  const auto full = bench_latency(model, rules, cfg, trace, {10, 2});
  const bool ok = mon.mean_us <= 10.0 && full.mean_us <= 2000.0;
  return {ok, fmt("monitor only %.3f +- %.3f us/token (<= 10 us); detector D=512 hidden=256 K=%zu "
                  "plus monitor %.1f +- %.1f us/token (<= 2000 us)",
                  mon.mean_us, mon.stddev_us, k, full.mean_us, full.stddev_us)};
}

// ------------------------------------------------------------ metrics

bool auc_matches(std::span<const double> scores, std::span<const bool> labels) {
  std::vector<ScoredLabel> items;
  for (std::size_t i = 0; i < scores.size(); ++i) items.push_back({scores[i], labels[i]});
  return roc_auc(items).auc == oracle::mann_whitney(scores, labels).auc();
}

Outcome auc_mann_whitney() {
  std::size_t cases = 0, wrong = 0;
  // Every labelling and every score pattern over three levels for n <= 6.
  for (std::size_t n = 2; n <= 6; ++n) {
    std::size_t patterns = 1;
    for (std::size_t i = 0; i < n; ++i) patterns *= 3;
    for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << n); ++mask) {
      for (std::size_t s = 0; s < patterns; ++s) {
        std::array<double, 6> scores{};
        std::array<bool, 6> labels{};
        std::size_t code = s;
        for (std::size_t i = 0; i < n; ++i) {
          scores[i] = 0.25 * static_cast<double>(code % 3);
          code /= 3;
          labels[i] = (mask >> i) & 1;
        }
        ++cases;
        wrong += auc_matches(std::span(scores).first(n), std::span(labels).first(n)) ? 0 : 1;
      }
    }
  }
  // Random inputs up to n = 200, heavy ties in half of them.
  Rng rng(707);
  for (int rep = 0; rep < 5000; ++rep) {
    const std::size_t n = 2 + uniform_below(rng, 199);
    std::array<double, 200> scores{};
    std::array<bool, 200> labels{};
    const bool ties = rep % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = ties ? static_cast<double>(uniform_below(rng, 5)) / 4.0 : uniform01(rng);
      labels[i] = uniform01(rng) < 0.4;
    }
    labels[0] = true;
    labels[1] = false;
    ++cases;
    wrong += auc_matches(std::span(scores).first(n), std::span(labels).first(n)) ? 0 : 1;
  }
  return {wrong == 0, fmt("%zu inputs (exhaustive to n=6, random to n=200): %zu differ", cases, wrong)};
}

}  // namespace

int main() {
  criterion("predicate-oracle", 1, predicate_oracle);
  criterion("dsl-round-trip", 5, dsl_round_trip);
  criterion("gradient-check", 30, gradient_check);
  criterion("synthetic-end-to-end", 300, synthetic_end_to_end);
  criterion("geometric-mean", 0, geometric_mean);
  criterion("window-oracle", 0, window_oracle);
  criterion("co-occurrence", 0, cooccurrence);
  criterion("latency", 0, latency);
  criterion("auc-mann-whitney", 0, auc_mann_whitney);
  std::fprintf(stderr, "%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
