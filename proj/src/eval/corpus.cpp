// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/eval/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>

#include <json.hpp>

#include "cerule/common/error.hpp"
#include "cerule/common/parallel.hpp"

namespace cerule {

using json = nlohmann::json;

namespace {

/// Runs body(i) for i in [0, n) in parallel and rethrows the first
/// exception (lowest index) after the loop.
template <typename F>
void parallel_map(std::size_t n, F&& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto nn = static_cast<std::ptrdiff_t>(n);
  CERULE_OMP(parallel for schedule(dynamic))
  for (std::ptrdiff_t i = 0; i < nn; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

ProbabilityTrace detect_trace(const DetectorModel& model, const ConversationTrace& trace) {
  ProbabilityTrace out;
  out.category = trace.category;
  out.ground_truth = trace.ground_truth;
  out.frames.reserve(trace.tokens.size());
  StreamingDetector det(model);
  for (const auto& tok : trace.tokens) {
    auto p = det.step(tok.values);
    out.frames.push_back({tok.position, tok.text, std::vector<float>(p.begin(), p.end())});
  }
  return out;
}

std::vector<ProbabilityTrace> detect_corpus(const DetectorModel& model,
                                            std::span<const ConversationTrace> traces) {
  std::vector<ProbabilityTrace> out(traces.size());
  parallel_map(traces.size(), [&](std::size_t i) { out[i] = detect_trace(model, traces[i]); });
  return out;
}

const char* calibration_level_name(CalibrationLevel l) {
  return l == CalibrationLevel::kTrace ? "trace" : "token";
}

CalibrationLevel parse_calibration_level(const std::string& s) {
  if (s == "trace") return CalibrationLevel::kTrace;
  if (s == "token") return CalibrationLevel::kToken;
  throw Error(Errc::kInvalidConfig, "unknown calibration level '" + s + "'");
}

std::vector<double> CalibrationResult::thresholds() const {
  std::vector<double> t;
  for (const auto& c : per_ce) t.push_back(c.threshold);
  return t;
}

std::string CalibrationResult::to_json(const std::vector<std::string>& names) const {
  json j;
  j["format"] = "cerule-calibration";
  j["level"] = calibration_level_name(level);
  json ces = json::array();
  for (std::size_t c = 0; c < per_ce.size(); ++c) {
    const auto& t = per_ce[c];
    ces.push_back({{"ce", c < names.size() ? names[c] : std::to_string(c)},
                   {"threshold", t.threshold},
                   {"tpr", t.tpr},
                   {"fpr", t.fpr},
                   {"fallback", t.fallback}});
  }
  j["ces"] = ces;
  return j.dump(2) + "\n";
}

CalibrationResult calibrate_thresholds(std::span<const ProbabilityTrace> probs,
                                       std::span<const ConversationTrace> labels,
                                       std::size_t num_ces, CalibrationLevel level) {
  if (probs.empty()) throw Error(Errc::kEmptyCorpus, "no calibration traces");
  if (probs.size() != labels.size()) {
    throw Error(Errc::kDimensionMismatch, "probability and label trace counts differ");
  }
  std::vector<std::vector<ScoredLabel>> items(num_ces);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto& pt = probs[i];
    const auto& lt = labels[i];
    if (pt.frames.size() != lt.tokens.size()) {
      throw Error(Errc::kDimensionMismatch, "trace " + std::to_string(i) +
                                                ": probability and token counts differ");
    }
    std::vector<double> mx(num_ces, 0.0);
    std::vector<std::uint8_t> present(num_ces, 0);
    for (std::size_t t = 0; t < pt.frames.size(); ++t) {
      const auto& f = pt.frames[t];
      const auto& lab = lt.tokens[t].labels;
      if (f.p.size() != num_ces || lab.size() != num_ces) {
        throw Error(Errc::kDimensionMismatch, "trace " + std::to_string(i) +
                                                  " lacks per-token labels for every CE");
      }
      for (std::size_t c = 0; c < num_ces; ++c) {
        if (level == CalibrationLevel::kToken) {
          items[c].push_back({f.p[c], lab[c] != 0});
        } else {
          mx[c] = std::max(mx[c], static_cast<double>(f.p[c]));
          present[c] |= lab[c];
        }
      }
    }
    if (level == CalibrationLevel::kTrace) {
      for (std::size_t c = 0; c < num_ces; ++c) items[c].push_back({mx[c], present[c] != 0});
    }
  }
  CalibrationResult r;
  r.level = level;
  for (const auto& it : items) r.per_ce.push_back(youden_threshold(it));
  return r;
}

void CategoryMetrics::fill_rates() {
  tpr = counts.tpr();
  fpr = counts.fpr();
  balanced_accuracy = counts.balanced_accuracy();
  f1 = counts.f1();
}

bool has_cooccurrence(const ProbabilityTrace& trace, std::span<const double> thresholds) {
  for (const auto& f : trace.frames) {
    int n = 0;
    for (std::size_t c = 0; c < f.p.size() && c < thresholds.size(); ++c) {
      if (f.p[c] >= thresholds[c] && ++n >= 2) return true;
    }
  }
  return false;
}

namespace {

TraceOutcome run_trace(const RuleSet& rules, const MonitorConfig& cfg,
                       const ProbabilityTrace& trace) {
  TraceOutcome o;
  o.category = trace.category;
  for (const auto& [rule, violated] : trace.ground_truth) o.positive = o.positive || violated;
  const std::size_t n_rules = rules.rules.size();
  o.fired.assign(n_rules, 0);
  o.rule_max_confidence.assign(n_rules, 0.0);
  MonitorState state(rules, cfg);
  for (const auto& f : trace.frames) {
    auto res = state.ingest(f.position, f.p, f.text);
    for (const auto& rec : res.fired) o.fired[rec.rule_index] = 1;
    const auto wmax = state.window_max();
    for (std::size_t r = 0; r < n_rules; ++r) {
      const double s = rule_confidence(rules.rules[r].predicate, wmax);
      o.rule_max_confidence[r] = std::max(o.rule_max_confidence[r], s);
    }
  }
  for (std::size_t r = 0; r < n_rules; ++r) {
    o.detected = o.detected || o.fired[r];
    o.max_confidence = std::max(o.max_confidence, o.rule_max_confidence[r]);
  }
  o.cooccurrence = has_cooccurrence(trace, cfg.thresholds);
  return o;
}

std::optional<double> try_auc(const std::vector<ScoredLabel>& items, RocResult* keep = nullptr) {
  try {
    auto r = roc_auc(items);
    if (keep) *keep = r;
    return r.auc;
  } catch (const Error& e) {
    if (e.code() != Errc::kSingleClass) throw;
    return std::nullopt;
  }
}

}  // namespace

EvalReport evaluate_probabilities(const RuleSet& rules, const MonitorConfig& config,
                                  std::span<const ProbabilityTrace> traces) {
  if (traces.empty()) throw Error(Errc::kEmptyCorpus, "evaluation corpus is empty");
  MonitorConfig cfg = config;
  cfg.halt_on_stop = false;
  cfg.validate(rules.vocabulary.size());

  EvalReport rep;
  rep.mode = cfg.mode;
  rep.window = cfg.window;
  rep.score_threshold = cfg.score_threshold;
  rep.ce_names = rules.vocabulary.names();
  rep.thresholds = cfg.thresholds;
  rep.outcomes.resize(traces.size());
  parallel_map(traces.size(),
               [&](std::size_t i) { rep.outcomes[i] = run_trace(rules, cfg, traces[i]); });

  std::vector<ScoredLabel> overall_items;
  rep.overall.category = "overall";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto& o = rep.outcomes[i];
    ++(o.positive ? rep.positives : rep.negatives);
    rep.overall.counts.add(o.positive, o.detected);
    overall_items.push_back({o.max_confidence, o.positive});
    if (o.positive && o.cooccurrence) ++rep.cooccurrence_traces;
  }
  rep.overall.fill_rates();
  rep.overall.auc = try_auc(overall_items, &rep.overall_roc);
  rep.cooccurrence_fraction =
      rep.positives ? static_cast<double>(rep.cooccurrence_traces) / static_cast<double>(rep.positives)
                    : 0.0;

  for (std::size_t r = 0; r < rules.rules.size(); ++r) {
    const auto& name = rules.rules[r].name;
    CategoryMetrics row;
    row.category = name;
    std::vector<ScoredLabel> items;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const auto& o = rep.outcomes[i];
      auto it = traces[i].ground_truth.find(name);
      const bool violates = it != traces[i].ground_truth.end() && it->second;
      if (!violates && o.positive) continue;  // violates some other rule only
      pos += violates ? 1 : 0;
      row.counts.add(violates, o.fired[r] != 0);
      items.push_back({o.rule_max_confidence[r], violates});
    }
    if (pos == 0) continue;
    row.fill_rates();
    row.auc = try_auc(items);
    rep.categories.push_back(std::move(row));
  }
  return rep;
}

EvalReport eval_corpus(const RuleSet& rules, const DetectorModel& model,
                       const MonitorConfig& config, std::span<const ConversationTrace> traces) {
  if (traces.empty()) throw Error(Errc::kEmptyCorpus, "evaluation corpus is empty");
  if (model.arch().num_labels != rules.vocabulary.size()) {
    throw Error(Errc::kDimensionMismatch, "detector has " +
                                              std::to_string(model.arch().num_labels) +
                                              " labels, vocabulary has " +
                                              std::to_string(rules.vocabulary.size()));
  }
  auto probs = detect_corpus(model, traces);
  return evaluate_probabilities(rules, config, probs);
}

namespace {

json metrics_json(const CategoryMetrics& m) {
  json j = {{"category", m.category},
            {"tp", m.counts.tp},
            {"fp", m.counts.fp},
            {"tn", m.counts.tn},
            {"fn", m.counts.fn},
            {"tpr", m.tpr},
            {"fpr", m.fpr},
            {"b_acc", m.balanced_accuracy},
            {"f1", m.f1}};
  j["auc"] = m.auc ? json(*m.auc) : json(nullptr);
  return j;
}

std::string csv_number(std::optional<double> v) {
  if (!v) return "";
  std::ostringstream s;
  s.precision(17);
  s << *v;
  return s.str();
}

}  // namespace

std::string EvalReport::to_json() const {
  json j;
  j["format"] = "cerule-eval";
  j["mode"] = score_mode_name(mode);
  j["window"] = window ? json(*window) : json("unbounded");
  if (mode == ScoreMode::kContinuous) j["score_threshold"] = score_threshold;
  json th = json::object();
  for (std::size_t c = 0; c < ce_names.size() && c < thresholds.size(); ++c) {
    th[ce_names[c]] = thresholds[c];
  }
  j["thresholds"] = th;
  j["positives"] = positives;
  j["negatives"] = negatives;
  j["overall"] = metrics_json(overall);
  json rows = json::array();
  for (const auto& c : categories) rows.push_back(metrics_json(c));
  j["categories"] = rows;
  j["cooccurrence"] = {{"traces", cooccurrence_traces},
                       {"positives", positives},
                       {"fraction", cooccurrence_fraction}};
  return j.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::ostringstream s;
  s.precision(17);
  s << "category,tp,fp,tn,fn,tpr,fpr,b_acc,f1,auc\n";
  auto row = [&](const CategoryMetrics& m) {
    s << m.category << ',' << m.counts.tp << ',' << m.counts.fp << ',' << m.counts.tn << ','
      << m.counts.fn << ',' << m.tpr << ',' << m.fpr << ',' << m.balanced_accuracy << ','
      << m.f1 << ',' << csv_number(m.auc) << '\n';
  };
  for (const auto& c : categories) row(c);
  row(overall);
  return s.str();
}

std::string EvalReport::roc_csv() const {
  std::ostringstream s;
  s.precision(17);
  s << "threshold,fpr,tpr\n";
  for (const auto& p : overall_roc.points) s << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
  return s.str();
}

std::string LatencyStats::to_json() const {
  json j = {{"path", with_detector ? "detector+monitor" : "monitor"},
            {"tokens_per_repetition", tokens},
            {"repetitions", repetitions},
            {"mean_us_per_token", mean_us},
            {"stddev_us_per_token", stddev_us},
            {"min_us_per_token", min_us},
            {"max_us_per_token", max_us}};
  return j.dump(2) + "\n";
}

namespace {

template <typename RunOnce>
LatencyStats time_runs(std::size_t tokens, const LatencyConfig& cfg, RunOnce&& run) {
  if (cfg.repetitions == 0) throw Error(Errc::kRejectedConfig, "repetitions must be at least 1");
  if (tokens == 0) throw Error(Errc::kRejectedConfig, "benchmark trace has no tokens");
  ThreadCountGuard one_thread(1);
  for (std::size_t i = 0; i < cfg.warmup; ++i) run();
  std::vector<double> per_token;
  per_token.reserve(cfg.repetitions);
  for (std::size_t i = 0; i < cfg.repetitions; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    run();
    const auto t1 = std::chrono::steady_clock::now();
    per_token.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count() /
                        static_cast<double>(tokens));
  }
  LatencyStats s;
  s.tokens = tokens;
  s.repetitions = cfg.repetitions;
  double sum = 0;
  for (double v : per_token) sum += v;
  s.mean_us = sum / static_cast<double>(per_token.size());
  double sq = 0;
  for (double v : per_token) sq += (v - s.mean_us) * (v - s.mean_us);
  s.stddev_us = per_token.size() > 1 ? std::sqrt(sq / static_cast<double>(per_token.size() - 1)) : 0.0;
  s.min_us = *std::min_element(per_token.begin(), per_token.end());
  s.max_us = *std::max_element(per_token.begin(), per_token.end());
  return s;
}

}  // namespace

LatencyStats bench_latency(const RuleSet& rules, const MonitorConfig& config,
                           const ProbabilityTrace& trace, const LatencyConfig& cfg) {
  MonitorConfig mc = config;
  mc.halt_on_stop = false;
  std::size_t sink = 0;
  auto s = time_runs(trace.frames.size(), cfg, [&] {
    MonitorState state(rules, mc);
    for (const auto& f : trace.frames) sink += state.ingest(f.position, f.p, f.text).fired.size();
  });
  (void)sink;
  return s;
}

LatencyStats bench_latency(const DetectorModel& model, const RuleSet& rules,
                           const MonitorConfig& config, const ConversationTrace& trace,
                           const LatencyConfig& cfg) {
  MonitorConfig mc = config;
  mc.halt_on_stop = false;
  std::size_t sink = 0;
  auto s = time_runs(trace.tokens.size(), cfg, [&] {
    StreamingDetector det(model);
    MonitorState state(rules, mc);
    for (const auto& t : trace.tokens) {
      sink += state.ingest(t.position, det.step(t.values), t.text).fired.size();
    }
  });
  (void)sink;
  s.with_detector = true;
  return s;
}

}  // namespace cerule
