// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/traces/excitation.hpp"

#include <algorithm>
#include <cstdio>

#include "cerule/common/error.hpp"
#include "cerule/traces/trace_io.hpp"

namespace cerule {

namespace fs = std::filesystem;

std::vector<float> ExcitationSegment::one_hot(std::size_t num_ces) const {
  std::vector<float> y(num_ces, 0.0f);
  if (label != kNoCe) y.at(label) = 1.0f;
  return y;
}

std::vector<ExcitationSegment> segment_trace(const ConversationTrace& trace, CeId label,
                                             std::size_t segment_length) {
  if (segment_length == 0) throw Error(Errc::kInvalidConfig, "segment length must be positive");
  const auto dim = trace.config.stacked_dim();
  std::vector<ExcitationSegment> out;
  for (std::size_t start = 0; start < trace.tokens.size(); start += segment_length) {
    ExcitationSegment seg;
    seg.dim = dim;
    seg.length = segment_length;
    seg.label = label;
    seg.valid = std::min(segment_length, trace.tokens.size() - start);
    seg.data.assign(segment_length * dim, 0.0f);
    for (std::size_t t = 0; t < seg.valid; ++t) {
      const auto& v = trace.tokens[start + t].values;
      if (v.size() != dim) throw Error(Errc::kDimensionMismatch, "token width disagrees with trace config");
      std::copy(v.begin(), v.end(), seg.data.begin() + static_cast<std::ptrdiff_t>(t * dim));
    }
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<ExcitationSegment> load_excitation_dir(const fs::path& dir, const CeVocabulary& vocab,
                                                   std::size_t segment_length) {
  if (!fs::is_directory(dir)) throw Error(Errc::kIo, dir.string() + " is not a directory");
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) subdirs.push_back(entry.path());
  }
  std::sort(subdirs.begin(), subdirs.end());

  std::vector<ExcitationSegment> out;
  std::optional<std::size_t> dim;
  for (const auto& sub : subdirs) {
    auto name = sub.filename().string();
    auto ce = name == kBackgroundDir ? std::optional<CeId>(kNoCe) : vocab.find(name);
    if (!ce) throw Error(Errc::kUnknownCe, "excitation directory '" + name + "' is not a known CE");
    for (const auto& file : list_trace_files(sub)) {
      auto trace = load_trace(file);
      if (dim && *dim != trace.config.stacked_dim()) {
        throw Error(Errc::kConfigMismatch, file.string() + ": stacked width differs from earlier traces");
      }
      dim = trace.config.stacked_dim();
      auto segs = segment_trace(trace, *ce, segment_length);
      std::move(segs.begin(), segs.end(), std::back_inserter(out));
    }
  }
  if (out.empty()) throw Error(Errc::kEmptyDataset, "no excitation segments under " + dir.string());
  return out;
}

void save_excitation_traces(const fs::path& dir, const CeVocabulary& vocab, CeId ce,
                            std::span<const ConversationTrace> traces) {
  auto sub = dir / (ce == kNoCe ? std::string(kBackgroundDir) : vocab[ce].name);
  fs::create_directories(sub);
  for (std::size_t i = 0; i < traces.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu.gat", i);
    save_trace(sub / name, traces[i]);
  }
}

}  // namespace cerule
