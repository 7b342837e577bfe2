// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// Line-delimited JSON for detector-less monitoring and for monitor output.
//
// Probability stream: an optional header line
//   {"format":"cerule-probs","category":"...","ground_truth":{"rule":true}}
// followed by one frame per line
//   {"t":12,"text":"tok","p":[0.1,0.9,...]}
// Fire records are single-line objects, see fire_record_json.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cerule/monitor/monitor.hpp"

namespace cerule {

struct ProbabilityFrame {
  std::uint64_t position = 0;
  std::string text;
  std::vector<float> p;

  bool operator==(const ProbabilityFrame&) const = default;
};

struct ProbabilityTrace {
  std::string category;
  std::map<std::string, bool> ground_truth;
  std::vector<ProbabilityFrame> frames;

  bool operator==(const ProbabilityTrace&) const = default;
};

/// Throws kSyntax (with the line number when given) on malformed input.
ProbabilityFrame parse_probability_line(std::string_view line, std::size_t line_no = 0);
std::string format_probability_line(const ProbabilityFrame& frame);

/// Reads a whole stream; blank lines are skipped.
ProbabilityTrace read_probability_trace(std::istream& in);
void write_probability_trace(std::ostream& out, const ProbabilityTrace& trace);
ProbabilityTrace load_probability_trace(const std::filesystem::path& path);
void save_probability_trace(const std::filesystem::path& path, const ProbabilityTrace& trace);

/// {"rule","position","action","override"?,"confidence","explanation":[{"ce","t","text","p"}]}
std::string fire_record_json(const FireRecord& record);

}  // namespace cerule
