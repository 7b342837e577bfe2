// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// Corpus evaluation, calibration over traces, co-occurrence and latency.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cerule/detector/gru.hpp"
#include "cerule/eval/metrics.hpp"
#include "cerule/monitor/monitor.hpp"
#include "cerule/monitor/stream_io.hpp"
#include "cerule/traces/activation.hpp"

namespace cerule {

/// Streams a trace through the detector (tumbling segments) and returns the
/// per-token probabilities with the trace's category and ground truth.
ProbabilityTrace detect_trace(const DetectorModel& model, const ConversationTrace& trace);

/// detect_trace over a corpus, parallel over traces.
std::vector<ProbabilityTrace> detect_corpus(const DetectorModel& model,
                                            std::span<const ConversationTrace> traces);

enum class CalibrationLevel : std::uint8_t {
  kTrace,  // score = max probability over the trace, label = CE anywhere in it
  kToken,  // every token is one item
};

const char* calibration_level_name(CalibrationLevel l);
CalibrationLevel parse_calibration_level(const std::string& s);

struct CalibrationResult {
  CalibrationLevel level = CalibrationLevel::kTrace;
  std::vector<ThresholdChoice> per_ce;

  std::vector<double> thresholds() const;
  std::string to_json(const std::vector<std::string>& ce_names) const;
};

/// Per-CE Youden calibration. `probs[i]` are the detector outputs for
/// `labels[i]`, the trace whose tokens carry per-CE ground truth. Throws
/// kEmptyCorpus and kDimensionMismatch (length or label width disagreement).
CalibrationResult calibrate_thresholds(std::span<const ProbabilityTrace> probs,
                                       std::span<const ConversationTrace> labels,
                                       std::size_t num_ces,
                                       CalibrationLevel level = CalibrationLevel::kTrace);

struct CategoryMetrics {
  std::string category;  // rule name, or "overall"
  Confusion counts;
  double tpr = 0, fpr = 0, balanced_accuracy = 0, f1 = 0;
  std::optional<double> auc;  // absent when a class is missing

  void fill_rates();
};

struct TraceOutcome {
  std::string category;
  bool positive = false;            // some ground-truth rule is violated
  bool detected = false;            // some rule fired
  double max_confidence = 0;        // max S_R over tokens and rules
  std::vector<std::uint8_t> fired;  // per rule
  std::vector<double> rule_max_confidence;
  bool cooccurrence = false;        // a token with >= 2 CEs at threshold
};

struct EvalReport {
  ScoreMode mode = ScoreMode::kBinary;
  std::optional<std::size_t> window;
  double score_threshold = 0.5;
  std::vector<std::string> ce_names;
  std::vector<double> thresholds;
  std::vector<CategoryMetrics> categories;  // one per rule with positives
  CategoryMetrics overall;
  RocResult overall_roc;                    // empty when a class is missing
  std::size_t positives = 0, negatives = 0;
  std::size_t cooccurrence_traces = 0;      // positives with a co-occurrence token
  double cooccurrence_fraction = 0;         // of positive traces
  std::vector<TraceOutcome> outcomes;

  std::string to_json() const;
  std::string to_csv() const;      // one row per category plus overall
  std::string roc_csv() const;     // threshold,fpr,tpr
};

/// Runs the monitor over every trace (stop actions do not halt, so every
/// rule's detection is measured). A trace is positive when its ground truth
/// marks some rule violated, negative when it marks none. Per-rule rows
/// compare traces violating that rule against the negatives; a rule is
/// detected when it fires at any token. The overall row counts any firing.
/// Throws kEmptyCorpus.
EvalReport evaluate_probabilities(const RuleSet& rules, const MonitorConfig& config,
                                  std::span<const ProbabilityTrace> traces);

/// detect_corpus followed by evaluate_probabilities.
EvalReport eval_corpus(const RuleSet& rules, const DetectorModel& model,
                       const MonitorConfig& config, std::span<const ConversationTrace> traces);

/// True when some frame has at least two CEs at or above their thresholds.
bool has_cooccurrence(const ProbabilityTrace& trace, std::span<const double> thresholds);

struct LatencyConfig {
  std::size_t repetitions = 20;
  std::size_t warmup = 3;
};

struct LatencyStats {
  bool with_detector = false;
  std::size_t tokens = 0;         // per repetition
  std::size_t repetitions = 0;
  double mean_us = 0;             // per token
  double stddev_us = 0;           // sample stddev of the per-repetition means
  double min_us = 0, max_us = 0;

  std::string to_json() const;
};

/// Monitor-only cost per token over precomputed probabilities. Pinned to one
/// thread. Throws kRejectedConfig when repetitions is 0 or the trace is empty.
LatencyStats bench_latency(const RuleSet& rules, const MonitorConfig& config,
                           const ProbabilityTrace& trace, const LatencyConfig& cfg);

/// Detector forward plus monitor ingest per token.
LatencyStats bench_latency(const DetectorModel& model, const RuleSet& rules,
                           const MonitorConfig& config, const ConversationTrace& trace,
                           const LatencyConfig& cfg);

}  // namespace cerule
