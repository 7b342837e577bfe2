// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// `.gat` binary and `.gatl` line-delimited JSON trace formats. The byte
// layout is documented in docs/FORMATS.md.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "cerule/common/binary_io.hpp"
#include "cerule/traces/activation.hpp"

namespace cerule {

inline constexpr char kTraceMagic[4] = {'C', 'G', 'A', 'T'};
inline constexpr std::uint16_t kTraceVersion = 1;

/// Header portion of a trace (everything but the token frames).
struct TraceHeader {
  ActivationConfig config;
  std::uint32_t label_width = 0;
  std::string category;
  std::map<std::string, bool> ground_truth;
};

/// Frame-at-a-time writer for live streams. Call finish() to emit the
/// end-of-stream marker.
class TraceWriter {
 public:
  TraceWriter(std::ostream& out, const TraceHeader& header);
  void write(const TokenActivation& token);
  void finish();
  std::uint64_t bytes_written() const { return writer_.offset(); }

 private:
  io::Writer writer_;
  std::size_t dim_;
  std::uint32_t label_width_;
  bool finished_ = false;
};

/// Frame-at-a-time reader. next() returns std::nullopt once the
/// end-of-stream marker is consumed; running out of bytes before that is a
/// kTruncatedFrame error naming the byte offset.
class TraceReader {
 public:
  explicit TraceReader(std::istream& in);
  const TraceHeader& header() const { return header_; }
  std::optional<TokenActivation> next();

 private:
  io::Reader reader_;
  TraceHeader header_;
  std::optional<std::uint64_t> last_position_;
  bool done_ = false;
};

void write_trace(std::ostream& out, const ConversationTrace& trace);

/// When `expected` is given, a header whose activation config differs is a
/// kConfigMismatch.
ConversationTrace read_trace(std::istream& in,
                             const std::optional<ActivationConfig>& expected = std::nullopt);

void write_trace_text(std::ostream& out, const ConversationTrace& trace);
ConversationTrace read_trace_text(std::istream& in,
                                  const std::optional<ActivationConfig>& expected = std::nullopt);

/// Dispatches on extension: `.gatl` is text, anything else binary.
void save_trace(const std::filesystem::path& path, const ConversationTrace& trace);
ConversationTrace load_trace(const std::filesystem::path& path,
                             const std::optional<ActivationConfig>& expected = std::nullopt);

/// Sorted list of `.gat`/`.gatl` files directly inside `dir`.
std::vector<std::filesystem::path> list_trace_files(const std::filesystem::path& dir);

}  // namespace cerule
