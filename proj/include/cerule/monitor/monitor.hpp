// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// Per-stream rule monitor: per-token CE probabilities in, rule firings and
// action directives out.
//
// A CE is present at step t when some token in the window W_t scored at or
// above its threshold. W_t holds positions in (t - N, t] for a bounded window
// of N, or every position seen so far when unbounded. Rules are edge
// triggered: a rule fires once when its predicate becomes true and re-arms
// only after it has been false again.

#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cerule/rules/ruleset.hpp"

namespace cerule {

enum class ScoreMode : std::uint8_t {
  kBinary,      // fire on the Boolean predicate over the presence vector
  kContinuous,  // fire when the confidence S_R reaches score_threshold
};

const char* score_mode_name(ScoreMode m);
ScoreMode parse_score_mode(std::string_view s);

struct MonitorConfig {
  std::optional<std::size_t> window;  // nullopt = whole conversation
  std::vector<double> thresholds;     // per CE
  ScoreMode mode = ScoreMode::kBinary;
  double score_threshold = 0.5;       // continuous mode only
  bool halt_on_stop = true;           // a Stop firing halts the stream

  /// Unbounded window, binary mode, thresholds from the vocabulary.
  static MonitorConfig from_vocabulary(const CeVocabulary& vocab);

  /// Throws kInvalidConfig (zero window, threshold count or range).
  void validate(std::size_t num_ces) const;
};

struct ExplanationRow {
  CeId ce = 0;
  std::string ce_name;
  std::uint64_t position = 0;
  std::string text;
  double probability = 0;

  bool operator==(const ExplanationRow&) const = default;
};

struct FireRecord {
  std::string rule;
  std::size_t rule_index = 0;
  std::uint64_t position = 0;
  Action action;
  double confidence = 0;                  // S_R at the firing token
  std::vector<ExplanationRow> explanation;
  std::uint64_t state_id = 0;             // the MonitorState that produced it
};

enum class Directive : std::uint8_t { kContinue, kStop, kOverride };

struct IngestResult {
  std::vector<FireRecord> fired;
  Directive directive = Directive::kContinue;
  std::string override_text;  // set for kOverride
};

/// S_R over per-CE window probabilities: leaf = P(c), AND = geometric mean of
/// the children, OR = max, NOT = 1 - child. Values are clamped into [0, 1].
double rule_confidence(const Predicate& p, std::span<const double> probabilities);

/// One per generation stream. Holds a pointer to the RuleSet, which must
/// outlive it. Not thread safe; independent states may run concurrently.
class MonitorState {
 public:
  MonitorState(const RuleSet& rules, MonitorConfig config);

  /// Throws kOutOfOrderToken (position not increasing), kProbabilityOutOfRange
  /// (outside [0,1] or NaN), kDimensionMismatch (wrong K), kStreamHalted.
  IngestResult ingest(std::uint64_t position, std::span<const float> probabilities,
                      std::string_view text = {});

  /// Rows citing every window token that met the threshold for each
  /// satisfied positive leaf CE of the record's rule, ordered by position.
  /// Throws kStaleRecord for records from another state.
  const std::vector<ExplanationRow>& explain(const FireRecord& record) const;

  const PresenceVector& presence() const { return presence_; }
  /// Per-CE maximum probability over the window (0 before any token).
  std::vector<double> window_max() const;
  /// Current S_R of rule `index`.
  double confidence(std::size_t index) const;
  bool rule_active(std::size_t index) const { return active_.at(index) != 0; }

  bool halted() const { return halted_; }
  const std::vector<FireRecord>& fired() const { return fired_; }
  std::size_t tokens_seen() const { return tokens_seen_; }
  std::uint64_t id() const { return id_; }
  const MonitorConfig& config() const { return config_; }
  const RuleSet& rules() const { return *rules_; }

 private:
  struct Hit {
    std::uint64_t position;
    float probability;
    std::string text;
  };
  struct MaxEntry {
    std::uint64_t position;
    float probability;
  };

  void evict(std::uint64_t position);
  std::vector<ExplanationRow> build_explanation(std::size_t rule_index) const;

  const RuleSet* rules_;
  MonitorConfig config_;
  std::uint64_t id_;
  std::size_t num_ces_;
  std::vector<std::vector<CeId>> positive_leaves_;
  std::vector<std::deque<Hit>> hits_;       // per CE, above-threshold tokens in the window
  std::vector<std::deque<MaxEntry>> maxq_;  // per CE, monotonic queue for the window max
  PresenceVector presence_;
  std::vector<std::uint8_t> active_;        // per rule, predicate true at the last token
  std::vector<FireRecord> fired_;
  std::optional<std::uint64_t> last_position_;
  std::size_t tokens_seen_ = 0;
  bool halted_ = false;
  mutable std::vector<double> scratch_;
};

}  // namespace cerule
