// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/monitor/monitor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "cerule/common/error.hpp"

namespace cerule {

const char* score_mode_name(ScoreMode m) {
  return m == ScoreMode::kBinary ? "binary" : "continuous";
}

ScoreMode parse_score_mode(std::string_view s) {
  if (s == "binary") return ScoreMode::kBinary;
  if (s == "continuous") return ScoreMode::kContinuous;
  throw Error(Errc::kInvalidConfig, "unknown score mode '" + std::string(s) + "'");
}

MonitorConfig MonitorConfig::from_vocabulary(const CeVocabulary& vocab) {
  MonitorConfig c;
  c.thresholds = vocab.thresholds();
  return c;
}

void MonitorConfig::validate(std::size_t num_ces) const {
  if (window && *window == 0) throw Error(Errc::kInvalidConfig, "window size must be at least 1");
  if (thresholds.size() != num_ces) {
    throw Error(Errc::kInvalidConfig, "expected " + std::to_string(num_ces) +
                                          " thresholds, got " + std::to_string(thresholds.size()));
  }
  for (double t : thresholds) {
    if (!(t >= 0 && t <= 1)) throw Error(Errc::kInvalidConfig, "thresholds must lie in [0, 1]");
  }
  if (!(score_threshold >= 0 && score_threshold <= 1)) {
    throw Error(Errc::kInvalidConfig, "score threshold must lie in [0, 1]");
  }
}

double rule_confidence(const Predicate& p, std::span<const double> probs) {
  switch (p.kind) {
    case NodeKind::kLeaf:
      return std::clamp(probs[p.ce], 0.0, 1.0);
    case NodeKind::kNot:
      return 1.0 - rule_confidence(p.children[0], probs);
    case NodeKind::kOr: {
      double best = 0.0;
      for (const auto& c : p.children) best = std::max(best, rule_confidence(c, probs));
      return best;
    }
    case NodeKind::kAnd: {
      double log_sum = 0.0, lo = 1.0, hi = 0.0;
      for (const auto& c : p.children) {
        const double v = rule_confidence(c, probs);
        if (v <= 0.0) return 0.0;
        log_sum += std::log(v);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      // Rounding in exp/log can step just outside the children's range.
      const double g = std::exp(log_sum / static_cast<double>(p.children.size()));
      return std::clamp(g, lo, hi);
    }
  }
  return 0.0;
}

namespace {
std::atomic<std::uint64_t> g_next_state_id{1};
}

MonitorState::MonitorState(const RuleSet& rules, MonitorConfig config)
    : rules_(&rules),
      config_(std::move(config)),
      id_(g_next_state_id.fetch_add(1, std::memory_order_relaxed)),
      num_ces_(rules.vocabulary.size()),
      hits_(num_ces_),
      maxq_(num_ces_),
      presence_(num_ces_),
      active_(rules.rules.size(), 0),
      scratch_(num_ces_, 0.0) {
  config_.validate(num_ces_);
  for (const auto& r : rules.rules) positive_leaves_.push_back(positive_leaves(r.predicate));
}

void MonitorState::evict(std::uint64_t position) {
  if (!config_.window) return;
  const std::uint64_t n = *config_.window;
  // Window holds positions p with p + n > position.
  for (std::size_t c = 0; c < num_ces_; ++c) {
    auto& h = hits_[c];
    while (!h.empty() && h.front().position + n <= position) h.pop_front();
    auto& q = maxq_[c];
    while (!q.empty() && q.front().position + n <= position) q.pop_front();
  }
}

IngestResult MonitorState::ingest(std::uint64_t position, std::span<const float> probs,
                                  std::string_view text) {
  if (halted_) throw Error(Errc::kStreamHalted, "stream was halted by a stop action");
  if (probs.size() != num_ces_) {
    throw Error(Errc::kDimensionMismatch, "expected " + std::to_string(num_ces_) +
                                              " probabilities, got " + std::to_string(probs.size()));
  }
  if (last_position_ && position <= *last_position_) {
    throw Error(Errc::kOutOfOrderToken, "token position " + std::to_string(position) +
                                            " does not follow " + std::to_string(*last_position_));
  }
  for (std::size_t c = 0; c < num_ces_; ++c) {
    if (!(probs[c] >= 0.0f && probs[c] <= 1.0f)) {
      throw Error(Errc::kProbabilityOutOfRange, "probability for CE " + std::to_string(c) +
                                                    " is outside [0, 1]");
    }
  }
  last_position_ = position;
  ++tokens_seen_;
  evict(position);

  for (std::size_t c = 0; c < num_ces_; ++c) {
    const float p = probs[c];
    if (p >= config_.thresholds[c]) hits_[c].push_back({position, p, std::string(text)});
    auto& q = maxq_[c];
    if (config_.window) {
      while (!q.empty() && q.back().probability <= p) q.pop_back();
      q.push_back({position, p});
    } else if (q.empty() || q.front().probability < p) {
      q.assign(1, {position, p});
    }
    presence_.set(static_cast<CeId>(c), !hits_[c].empty());
  }

  const bool continuous = config_.mode == ScoreMode::kContinuous;
  if (continuous) {
    for (std::size_t c = 0; c < num_ces_; ++c) scratch_[c] = maxq_[c].front().probability;
  }

  IngestResult result;
  for (std::size_t i = 0; i < rules_->rules.size(); ++i) {
    const auto& rule = rules_->rules[i];
    bool now;
    double score = -1.0;
    if (continuous) {
      score = rule_confidence(rule.predicate, scratch_);
      now = score >= config_.score_threshold;
    } else {
      now = evaluate(rule.predicate, presence_);
    }
    const bool rising = now && !active_[i];
    active_[i] = now ? 1 : 0;
    if (!rising) continue;

    FireRecord rec;
    rec.rule = rule.name;
    rec.rule_index = i;
    rec.position = position;
    rec.action = rule.action;
    rec.confidence = score >= 0 ? score : confidence(i);
    rec.explanation = build_explanation(i);
    rec.state_id = id_;
    switch (rule.action.kind) {
      case ActionKind::kStop:
        if (config_.halt_on_stop) result.directive = Directive::kStop;
        break;
      case ActionKind::kOverride:
        if (result.directive == Directive::kContinue) {
          result.directive = Directive::kOverride;
          result.override_text = rule.action.scripted_text;
        }
        break;
      case ActionKind::kAlert:
        break;
    }
    fired_.push_back(rec);
    result.fired.push_back(std::move(rec));
  }
  if (result.directive == Directive::kStop) {
    result.override_text.clear();
    halted_ = true;
  }
  return result;
}

std::vector<ExplanationRow> MonitorState::build_explanation(std::size_t rule_index) const {
  std::vector<ExplanationRow> rows;
  for (CeId c : positive_leaves_[rule_index]) {
    for (const auto& h : hits_[c]) {
      rows.push_back({c, rules_->vocabulary[c].name, h.position, h.text, h.probability});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.position != b.position ? a.position < b.position : a.ce < b.ce;
  });
  return rows;
}

const std::vector<ExplanationRow>& MonitorState::explain(const FireRecord& record) const {
  if (record.state_id != id_) {
    throw Error(Errc::kStaleRecord, "fire record belongs to a different monitor state");
  }
  return record.explanation;
}

std::vector<double> MonitorState::window_max() const {
  std::vector<double> out(num_ces_, 0.0);
  for (std::size_t c = 0; c < num_ces_; ++c) {
    if (!maxq_[c].empty()) out[c] = maxq_[c].front().probability;
  }
  return out;
}

double MonitorState::confidence(std::size_t index) const {
  const auto probs = window_max();
  return rule_confidence(rules_->rules.at(index).predicate, probs);
}

}  // namespace cerule
