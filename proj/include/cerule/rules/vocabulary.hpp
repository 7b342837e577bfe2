// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cerule {

using CeId = std::uint32_t;

struct CeEntry {
  CeId id = 0;
  std::string name;         // `category:name`, e.g. `topic:taxation`
  std::string description;
  double threshold = 0.5;   // detection threshold on the detector probability

  bool operator==(const CeEntry&) const = default;
};

/// Registry of the K Cognitive Elements a detector and a ruleset agree on.
/// Ids are contiguous 0..K-1 and names unique; enforced on construction.
class CeVocabulary {
 public:
  CeVocabulary() = default;
  explicit CeVocabulary(std::vector<CeEntry> entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const CeEntry& operator[](CeId id) const { return entries_.at(id); }
  const std::vector<CeEntry>& entries() const { return entries_; }

  std::optional<CeId> find(std::string_view name) const;
  std::vector<double> thresholds() const;
  std::vector<std::string> names() const;

  /// Throws kInvalidVocabulary when outside [0,1].
  void set_threshold(CeId id, double threshold);

  static bool valid_name(std::string_view name);

  bool operator==(const CeVocabulary& other) const { return entries_ == other.entries_; }

 private:
  std::vector<CeEntry> entries_;
  std::unordered_map<std::string, CeId> by_name_;
};

/// Parses the `[ce]` record manifest (see docs/FORMATS.md).
CeVocabulary parse_vocabulary(std::string_view text);
std::string format_vocabulary(const CeVocabulary& vocab);
CeVocabulary load_vocabulary(const std::filesystem::path& path);

}  // namespace cerule
