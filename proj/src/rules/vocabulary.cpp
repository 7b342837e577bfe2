// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/rules/vocabulary.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>
#include <sstream>

#include "cerule/common/atomic_file.hpp"
#include "cerule/common/error.hpp"
#include "cerule/common/text.hpp"

namespace cerule {

namespace {

[[noreturn]] void invalid(const std::string& message) {
  throw Error(Errc::kInvalidVocabulary, message);
}

}  // namespace

CeVocabulary::CeVocabulary(std::vector<CeEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.id != i) {
      invalid("ce ids must be contiguous from 0: entry " + std::to_string(i) +
              " has id " + std::to_string(e.id));
    }
    if (!valid_name(e.name)) invalid("invalid ce name '" + e.name + "'");
    if (!(e.threshold >= 0.0 && e.threshold <= 1.0)) {
      invalid("threshold for '" + e.name + "' outside [0,1]");
    }
    if (!by_name_.emplace(e.name, e.id).second) invalid("duplicate ce name '" + e.name + "'");
  }
}

std::optional<CeId> CeVocabulary::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> CeVocabulary::thresholds() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.threshold);
  return out;
}

std::vector<std::string> CeVocabulary::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.name);
  return out;
}

void CeVocabulary::set_threshold(CeId id, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    invalid("threshold " + std::to_string(threshold) + " outside [0,1]");
  }
  entries_.at(id).threshold = threshold;
}

bool CeVocabulary::valid_name(std::string_view name) {
  static const std::regex pattern("[a-z_][a-z0-9_]*:[a-z0-9_+]+");
  return !name.empty() && std::regex_match(name.begin(), name.end(), pattern);
}

CeVocabulary parse_vocabulary(std::string_view text) {
  std::vector<CeEntry> entries;
  struct Pending {
    CeEntry entry;
    bool has_id = false;
    bool has_name = false;
    std::size_t line = 0;
  };
  std::optional<Pending> current;

  auto flush = [&] {
    if (!current) return;
    if (!current->has_id || !current->has_name) {
      invalid("record starting at line " + std::to_string(current->line) +
              " needs both 'id' and 'name'");
    }
    entries.push_back(std::move(current->entry));
    current.reset();
  };

  std::size_t line_no = 0;
  for (auto raw : split_lines(text)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line == "[ce]") {
      flush();
      current.emplace();
      current->line = line_no;
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      invalid("line " + std::to_string(line_no) + ": expected 'key = value' or '[ce]'");
    }
    if (!current) invalid("line " + std::to_string(line_no) + ": field outside a [ce] record");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    auto& e = current->entry;
    if (key == "id") {
      unsigned long long id = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), id);
      if (ec != std::errc{} || ptr != value.data() + value.size() || id > 0xFFFFFFFFull) {
        invalid("line " + std::to_string(line_no) + ": bad id '" + std::string(value) + "'");
      }
      e.id = static_cast<CeId>(id);
      current->has_id = true;
    } else if (key == "name") {
      e.name = std::string(value);
      current->has_name = true;
    } else if (key == "description") {
      e.description = std::string(value);
    } else if (key == "threshold") {
      auto parsed = parse_double(value);
      if (!parsed) {
        invalid("line " + std::to_string(line_no) + ": bad threshold '" + std::string(value) + "'");
      }
      e.threshold = *parsed;
    } else {
      invalid("line " + std::to_string(line_no) + ": unknown field '" + std::string(key) + "'");
    }
  }
  flush();
  if (entries.empty()) invalid("vocabulary has no entries");
  std::sort(entries.begin(), entries.end(),
            [](const CeEntry& a, const CeEntry& b) { return a.id < b.id; });
  return CeVocabulary(std::move(entries));
}

std::string format_vocabulary(const CeVocabulary& vocab) {
  std::ostringstream out;
  for (const auto& e : vocab.entries()) {
    out << "[ce]\n"
        << "id = " << e.id << '\n'
        << "name = " << e.name << '\n'
        << "threshold = " << format_double(e.threshold) << '\n';
    if (!e.description.empty()) out << "description = " << e.description << '\n';
    out << '\n';
  }
  return out.str();
}

CeVocabulary load_vocabulary(const std::filesystem::path& path) {
  return parse_vocabulary(read_text_file(path));
}

}  // namespace cerule
