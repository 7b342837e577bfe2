// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/monitor/stream_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "cerule/common/atomic_file.hpp"
#include "cerule/common/error.hpp"

namespace cerule {

using json = nlohmann::json;

namespace {

[[noreturn]] void syntax(std::size_t line_no, const std::string& what) {
  std::string where = line_no ? "line " + std::to_string(line_no) + ": " : "";
  throw Error(Errc::kSyntax, where + what);
}

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

ProbabilityFrame parse_probability_line(std::string_view line, std::size_t line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) syntax(line_no, "not a JSON object");
  ProbabilityFrame f;
  try {
    if (!j.contains("t") || !j["t"].is_number_unsigned()) {
      syntax(line_no, "frame needs a non-negative integer \"t\"");
    }
    f.position = j["t"].get<std::uint64_t>();
    if (j.contains("text")) f.text = j["text"].get<std::string>();
    if (!j.contains("p") || !j["p"].is_array()) syntax(line_no, "frame needs a \"p\" array");
    for (const auto& v : j["p"]) {
      if (!v.is_number()) syntax(line_no, "\"p\" must hold numbers");
      f.p.push_back(v.get<float>());
    }
  } catch (const json::exception& e) {
    syntax(line_no, e.what());
  }
  return f;
}

std::string format_probability_line(const ProbabilityFrame& f) {
  json j;
  j["t"] = f.position;
  j["text"] = f.text;
  j["p"] = f.p;
  return j.dump();
}

ProbabilityTrace read_probability_trace(std::istream& in) {
  ProbabilityTrace trace;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    if (first) {
      first = false;
      json j = json::parse(line, nullptr, false);
      if (j.is_object() && j.contains("format")) {
        if (j["format"] != "cerule-probs") syntax(line_no, "unknown stream format");
        try {
          trace.category = j.value("category", std::string());
          if (j.contains("ground_truth")) {
            trace.ground_truth = j["ground_truth"].get<std::map<std::string, bool>>();
          }
        } catch (const json::exception& e) {
          syntax(line_no, e.what());
        }
        continue;
      }
    }
    trace.frames.push_back(parse_probability_line(line, line_no));
  }
  return trace;
}

void write_probability_trace(std::ostream& out, const ProbabilityTrace& trace) {
  json h;
  h["format"] = "cerule-probs";
  h["category"] = trace.category;
  h["ground_truth"] = trace.ground_truth;
  out << h.dump() << '\n';
  for (const auto& f : trace.frames) out << format_probability_line(f) << '\n';
}

ProbabilityTrace load_probability_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return read_probability_trace(in);
}

void save_probability_trace(const std::filesystem::path& path, const ProbabilityTrace& trace) {
  write_file_atomic(path, [&](std::ostream& out) { write_probability_trace(out, trace); });
}

std::string fire_record_json(const FireRecord& r) {
  json j;
  j["rule"] = r.rule;
  j["position"] = r.position;
  j["action"] = std::string(action_keyword(r.action.kind));
  if (r.action.kind == ActionKind::kOverride) j["override"] = r.action.scripted_text;
  j["confidence"] = r.confidence;
  json rows = json::array();
  for (const auto& e : r.explanation) {
    rows.push_back({{"ce", e.ce_name}, {"t", e.position}, {"text", e.text}, {"p", e.probability}});
  }
  j["explanation"] = rows;
  return j.dump();
}

}  // namespace cerule
