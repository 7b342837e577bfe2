// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/synth/synthetic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "cerule/common/error.hpp"

namespace cerule::synth {

double ClusterSpace::center_scale() const { return separation * sigma / std::sqrt(2.0); }

void ClusterSpace::validate() const {
  if (num_ces == 0 || num_ces >= dim) {
    throw Error(Errc::kInvalidConfig, "cluster space needs 0 < num_ces < dim");
  }
  if (!(sigma > 0) || !(separation >= 0)) {
    throw Error(Errc::kInvalidConfig, "cluster space needs sigma > 0 and separation >= 0");
  }
}

std::vector<float> ClusterSpace::sample(std::span<const CeId> ces, Rng& rng) const {
  std::vector<float> v(dim);
  for (auto& x : v) x = static_cast<float>(sigma * standard_normal(rng));
  const auto scale = static_cast<float>(center_scale());
  if (ces.empty()) v[num_ces] += scale;
  for (CeId c : ces) v.at(c) += scale;
  return v;
}

CeVocabulary synthetic_vocabulary(std::size_t k) {
  static const char* kGreek[] = {"alpha", "beta",   "gamma", "delta",   "epsilon", "zeta",
                                 "eta",   "theta",  "iota",  "kappa",   "lambda",  "mu",
                                 "nu",    "xi",     "omicron", "pi",    "rho",     "sigma",
                                 "tau",   "upsilon", "phi",  "chi",     "psi",     "omega"};
  constexpr std::size_t kCount = sizeof(kGreek) / sizeof(kGreek[0]);
  std::vector<CeEntry> entries;
  for (std::size_t i = 0; i < k; ++i) {
    std::string name = "synth:" + std::string(kGreek[i % kCount]);
    // Beyond 24 names, append a letter suffix per wrap (digits are not legal).
    for (std::size_t w = i / kCount; w > 0; w /= 26) name += static_cast<char>('a' + (w - 1) % 26);
    entries.push_back({static_cast<CeId>(i), name, "synthetic cluster " + std::to_string(i), 0.5});
  }
  return CeVocabulary(std::move(entries));
}

ActivationConfig synthetic_config(std::size_t dim) {
  return {"synthetic", static_cast<std::uint32_t>(dim), {0}, ActivationSource::kAttentionOutput};
}

std::vector<ExcitationSegment> excitation_dataset(const ClusterSpace& space, std::size_t per_ce,
                                                  std::size_t segment_len, std::uint64_t seed,
                                                  std::size_t background) {
  space.validate();
  Rng rng(seed);
  std::vector<ExcitationSegment> out;
  out.reserve(per_ce * space.num_ces + background);
  auto add = [&](CeId label, std::span<const CeId> ces) {
    ExcitationSegment s;
    s.dim = space.dim;
    s.length = segment_len;
    s.valid = segment_len;
    s.label = label;
    s.data.reserve(segment_len * space.dim);
    for (std::size_t t = 0; t < segment_len; ++t) {
      auto tok = space.sample(ces, rng);
      s.data.insert(s.data.end(), tok.begin(), tok.end());
    }
    out.push_back(std::move(s));
  };
  for (std::size_t c = 0; c < space.num_ces; ++c) {
    const CeId ce[] = {static_cast<CeId>(c)};
    for (std::size_t i = 0; i < per_ce; ++i) add(ce[0], ce);
  }
  for (std::size_t i = 0; i < background; ++i) add(kNoCe, {});
  return out;
}

ConversationTrace make_trace(const ClusterSpace& space, std::size_t length,
                             std::span<const Injection> injections, Rng& rng) {
  space.validate();
  std::vector<std::vector<CeId>> carried(length);
  for (const auto& inj : injections) {
    if (inj.start + inj.length > length) {
      throw Error(Errc::kInvalidConfig, "injection runs past the end of the trace");
    }
    for (std::size_t t = inj.start; t < inj.start + inj.length; ++t) {
      for (CeId c : inj.ces) {
        if (c >= space.num_ces) throw Error(Errc::kUnknownCe, "injected CE out of range");
        if (std::find(carried[t].begin(), carried[t].end(), c) == carried[t].end()) {
          carried[t].push_back(c);
        }
      }
    }
  }
  ConversationTrace trace;
  trace.config = synthetic_config(space.dim);
  trace.label_width = static_cast<std::uint32_t>(space.num_ces);
  trace.tokens.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    TokenActivation tok;
    tok.values = space.sample(carried[t], rng);
    tok.position = t;
    tok.text = "tok" + std::to_string(t);
    tok.labels.assign(space.num_ces, 0);
    for (CeId c : carried[t]) tok.labels[c] = 1;
    trace.tokens.push_back(std::move(tok));
  }
  return trace;
}

std::vector<CeId> minimal_witness(const Predicate& p, std::size_t num_ces) {
  const auto refs = referenced_ces(p);
  if (refs.size() > 20) throw Error(Errc::kInvalidConfig, "too many CEs for a witness search");
  if (evaluate(p, PresenceVector(num_ces))) return {};
  std::vector<CeId> best;
  bool found = false;
  const std::uint64_t n_sets = std::uint64_t{1} << refs.size();
  for (std::size_t size = 1; size <= refs.size() && !found; ++size) {
    for (std::uint64_t mask = 1; mask < n_sets; ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != size) continue;
      PresenceVector pv(num_ces);
      std::vector<CeId> set;
      for (std::size_t i = 0; i < refs.size(); ++i) {
        if (mask >> i & 1) {
          pv.set(refs[i]);
          set.push_back(refs[i]);
        }
      }
      if (evaluate(p, pv) && (!found || set < best)) {
        best = set;
        found = true;
      }
    }
  }
  return best;
}

namespace {

/// Starts for `runs` non-touching runs of `run_len` tokens in `length`.
std::vector<std::size_t> place_runs(std::size_t runs, std::size_t run_len, std::size_t length,
                                    Rng& rng) {
  if (runs == 0) return {};
  const std::size_t needed = runs * run_len + (runs - 1);
  if (needed > length) throw Error(Errc::kInvalidConfig, "trace too short for the planted runs");
  std::vector<std::size_t> gaps(runs + 1, 0);
  for (std::size_t i = 0; i < length - needed; ++i) ++gaps[uniform_below(rng, runs + 1)];
  std::vector<std::size_t> starts;
  std::size_t pos = gaps[0];
  for (std::size_t r = 0; r < runs; ++r) {
    starts.push_back(pos);
    pos += run_len + 1 + gaps[r + 1];
  }
  return starts;
}

}  // namespace

std::vector<ConversationTrace> make_rule_corpus(const ClusterSpace& space, const RuleSet& rules,
                                                const CorpusSpec& spec) {
  space.validate();
  if (rules.rules.empty()) throw Error(Errc::kInvalidConfig, "corpus needs at least one rule");
  if (!(spec.overlap_rate >= 0 && spec.overlap_rate <= 1)) {
    throw Error(Errc::kInvalidConfig, "overlap_rate must lie in [0, 1]");
  }
  const std::size_t k = space.num_ces;
  Rng rng(spec.seed);

  std::vector<std::vector<CeId>> witness;
  for (const auto& r : rules.rules) {
    auto w = minimal_witness(r.predicate, k);
    if (w.empty()) throw Error(Errc::kInvalidConfig, "rule " + r.name + " has no positive witness");
    witness.push_back(std::move(w));
  }
  // CEs that trip no rule when they appear alone.
  std::vector<CeId> safe_singles;
  for (CeId c = 0; c < k; ++c) {
    PresenceVector pv(k);
    pv.set(c);
    bool trips = false;
    for (const auto& r : rules.rules) trips = trips || evaluate(r.predicate, pv);
    if (!trips) safe_singles.push_back(c);
  }

  const auto n_overlap =
      static_cast<std::size_t>(std::llround(spec.overlap_rate * static_cast<double>(spec.positives)));
  std::vector<std::uint8_t> overlap(spec.positives, 0);
  for (std::size_t i = 0; i < n_overlap; ++i) overlap[i] = 1;
  shuffle(std::span(overlap), rng);

  std::vector<ConversationTrace> out;
  out.reserve(spec.positives + spec.negatives);
  auto truth_for = [&](const PresenceVector& planted) {
    std::map<std::string, bool> gt;
    for (const auto& r : rules.rules) gt[r.name] = evaluate(r.predicate, planted);
    return gt;
  };

  for (std::size_t i = 0; i < spec.positives; ++i) {
    const std::size_t ri = i % rules.rules.size();
    const auto& w = witness[ri];
    std::vector<std::vector<CeId>> runs;
    if (overlap[i] && w.size() >= 2) {
      runs.push_back({w[0], w[1]});
      for (std::size_t j = 2; j < w.size(); ++j) runs.push_back({w[j]});
    } else if (overlap[i]) {
      // Single-CE witness: overlap it with another CE that is harmless alone.
      std::vector<CeId> pair = w;
      for (CeId c : safe_singles) {
        if (c != w[0]) {
          pair.push_back(c);
          break;
        }
      }
      runs.push_back(pair);
    } else {
      for (CeId c : w) runs.push_back({c});
    }
    shuffle(std::span(runs), rng);
    auto starts = place_runs(runs.size(), spec.run_length, spec.length, rng);
    std::vector<Injection> inj;
    PresenceVector planted(k);
    for (std::size_t r = 0; r < runs.size(); ++r) {
      inj.push_back({runs[r], starts[r], spec.run_length});
      for (CeId c : runs[r]) planted.set(c);
    }
    auto trace = make_trace(space, spec.length, inj, rng);
    trace.category = rules.rules[ri].name;
    trace.ground_truth = truth_for(planted);
    out.push_back(std::move(trace));
  }

  for (std::size_t i = 0; i < spec.negatives; ++i) {
    std::vector<Injection> inj;
    PresenceVector planted(k);
    if (!safe_singles.empty()) {
      const CeId c = safe_singles[uniform_below(rng, safe_singles.size())];
      auto starts = place_runs(1, spec.run_length, spec.length, rng);
      inj.push_back({{c}, starts[0], spec.run_length});
      planted.set(c);
    }
    auto trace = make_trace(space, spec.length, inj, rng);
    trace.category = "benign";
    trace.ground_truth = truth_for(planted);
    out.push_back(std::move(trace));
  }
  return out;
}

ProbabilityTrace label_probabilities(const ConversationTrace& trace, Rng& rng, double hit_lo,
                                     double miss_hi) {
  ProbabilityTrace out;
  out.category = trace.category;
  out.ground_truth = trace.ground_truth;
  for (const auto& t : trace.tokens) {
    ProbabilityFrame f{t.position, t.text, {}};
    for (std::uint8_t l : t.labels) {
      const double u = uniform01(rng);
      f.p.push_back(static_cast<float>(l ? hit_lo + (1.0 - hit_lo) * u : miss_hi * u));
    }
    out.frames.push_back(std::move(f));
  }
  return out;
}

std::vector<std::uint64_t> labelled_positions(const ConversationTrace& trace, CeId ce) {
  std::vector<std::uint64_t> out;
  for (const auto& t : trace.tokens) {
    if (ce < t.labels.size() && t.labels[ce]) out.push_back(t.position);
  }
  return out;
}

}  // namespace cerule::synth
