// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/traces/trace_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "cerule/common/atomic_file.hpp"
#include "cerule/common/error.hpp"

namespace cerule {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::size_t label_bytes(std::uint32_t width) { return (width + 7) / 8; }

void check_expected(const ActivationConfig& got, const std::optional<ActivationConfig>& expected) {
  if (!expected) return;
  if (got.hidden_dim != expected->hidden_dim || got.layers != expected->layers ||
      got.source != expected->source) {
    throw Error(Errc::kConfigMismatch, "trace activation config does not match the expected one "
                                       "(D=" + std::to_string(got.stacked_dim()) + " vs " +
                                           std::to_string(expected->stacked_dim()) + ")");
  }
}

TraceHeader header_of(const ConversationTrace& t) {
  return {t.config, t.label_width, t.category, t.ground_truth};
}

}  // namespace

// ---------------------------------------------------------------- binary

TraceWriter::TraceWriter(std::ostream& out, const TraceHeader& h)
    : writer_(out), dim_(h.config.stacked_dim()), label_width_(h.label_width) {
  h.config.validate();
  writer_.raw(kTraceMagic, 4);
  writer_.put(kTraceVersion);
  writer_.put(static_cast<std::uint16_t>(h.config.source));
  writer_.put(h.label_width);
  writer_.put(static_cast<std::uint32_t>(dim_));
  writer_.put(h.config.hidden_dim);
  writer_.put(static_cast<std::uint32_t>(h.config.layers.size()));
  for (auto l : h.config.layers) writer_.put(l);
  writer_.put_string(h.config.model_name);
  writer_.put_string(h.category);
  writer_.put(static_cast<std::uint32_t>(h.ground_truth.size()));
  for (const auto& [rule, violated] : h.ground_truth) {
    writer_.put_string(rule);
    writer_.put(static_cast<std::uint8_t>(violated ? 1 : 0));
  }
}

void TraceWriter::write(const TokenActivation& t) {
  if (t.values.size() != dim_) {
    throw Error(Errc::kDimensionMismatch, "frame has " + std::to_string(t.values.size()) +
                                              " values, header says " + std::to_string(dim_));
  }
  if (!all_finite(t.values)) throw Error(Errc::kNonFiniteValue, "frame has a non-finite value");
  if (!t.labels.empty() && t.labels.size() != label_width_) {
    throw Error(Errc::kDimensionMismatch, "frame label width disagrees with header");
  }
  std::uint64_t len = 8 + 4 + t.text.size() + 4 * dim_ + label_bytes(label_width_);
  if (len >= 0xFFFFFFFFull) throw Error(Errc::kIo, "frame too large");
  writer_.put(static_cast<std::uint32_t>(len));
  writer_.put(t.position);
  writer_.put_string(t.text);
  writer_.put_f32s(t.values);
  std::vector<std::uint8_t> bits(label_bytes(label_width_), 0);
  for (std::size_t c = 0; c < t.labels.size(); ++c) {
    if (t.labels[c]) bits[c / 8] |= static_cast<std::uint8_t>(1u << (c % 8));
  }
  if (!bits.empty()) writer_.raw(bits.data(), bits.size());
}

void TraceWriter::finish() {
  if (finished_) return;
  writer_.put(std::uint32_t{0});
  finished_ = true;
}

TraceReader::TraceReader(std::istream& in) : reader_(in) {
  char magic[4];
  reader_.raw(magic, 4, "magic");
  if (std::memcmp(magic, kTraceMagic, 4) != 0) throw Error(Errc::kBadMagic, "not a .gat trace");
  auto version = reader_.get<std::uint16_t>("version");
  if (version != kTraceVersion) {
    throw Error(Errc::kBadMagic, "unsupported trace version " + std::to_string(version));
  }
  auto source = reader_.get<std::uint16_t>("source");
  if (source > 1) throw Error(Errc::kConfigMismatch, "unknown activation source " + std::to_string(source));
  auto& cfg = header_.config;
  cfg.source = static_cast<ActivationSource>(source);
  header_.label_width = reader_.get<std::uint32_t>("label width");
  auto dim = reader_.get<std::uint32_t>("stacked dim");
  cfg.hidden_dim = reader_.get<std::uint32_t>("hidden dim");
  auto n_layers = reader_.get<std::uint32_t>("layer count");
  if (n_layers > 4096) throw Error(Errc::kConfigMismatch, "implausible layer count");
  cfg.layers.resize(n_layers);
  for (auto& l : cfg.layers) l = reader_.get<std::uint32_t>("layer index");
  cfg.model_name = reader_.get_string("model name");
  header_.category = reader_.get_string("category");
  auto n_truth = reader_.get<std::uint32_t>("ground truth count");
  for (std::uint32_t i = 0; i < n_truth; ++i) {
    auto rule = reader_.get_string("ground truth rule");
    header_.ground_truth[rule] = reader_.get<std::uint8_t>("ground truth value") != 0;
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(Errc::kConfigMismatch, std::string("bad header: ") + e.what());
  }
  if (dim != cfg.stacked_dim()) {
    throw Error(Errc::kConfigMismatch, "header D=" + std::to_string(dim) + " but layers x d = " +
                                           std::to_string(cfg.stacked_dim()));
  }
}

std::optional<TokenActivation> TraceReader::next() {
  if (done_) return std::nullopt;
  auto frame_start = reader_.offset();
  auto len = reader_.get<std::uint32_t>("frame length");
  if (len == 0) {
    done_ = true;
    return std::nullopt;
  }
  const auto dim = header_.config.stacked_dim();
  TokenActivation t;
  t.position = reader_.get<std::uint64_t>("frame position");
  t.text = reader_.get_string("frame text");
  std::uint64_t expect = 8 + 4 + t.text.size() + 4 * dim + label_bytes(header_.label_width);
  if (len != expect) {
    throw Error(Errc::kConfigMismatch, "frame at byte offset " + std::to_string(frame_start) +
                                           " has length " + std::to_string(len) + ", expected " +
                                           std::to_string(expect));
  }
  t.values.resize(dim);
  reader_.get_f32s(t.values, "frame vector");
  if (header_.label_width > 0) {
    std::vector<std::uint8_t> bits(label_bytes(header_.label_width));
    reader_.raw(bits.data(), bits.size(), "frame labels");
    t.labels.resize(header_.label_width);
    for (std::size_t c = 0; c < t.labels.size(); ++c) t.labels[c] = (bits[c / 8] >> (c % 8)) & 1u;
  }
  if (!all_finite(t.values)) {
    throw Error(Errc::kNonFiniteValue,
                "non-finite value in frame at byte offset " + std::to_string(frame_start));
  }
  if (last_position_ && t.position <= *last_position_) {
    throw Error(Errc::kOutOfOrderToken,
                "frame at byte offset " + std::to_string(frame_start) + " is out of order");
  }
  last_position_ = t.position;
  return t;
}

void write_trace(std::ostream& out, const ConversationTrace& trace) {
  TraceWriter w(out, header_of(trace));
  for (const auto& t : trace.tokens) w.write(t);
  w.finish();
}

ConversationTrace read_trace(std::istream& in, const std::optional<ActivationConfig>& expected) {
  TraceReader r(in);
  const auto& h = r.header();
  check_expected(h.config, expected);
  ConversationTrace trace{h.config, h.label_width, h.category, h.ground_truth, {}};
  while (auto t = r.next()) trace.tokens.push_back(std::move(*t));
  return trace;
}

// ---------------------------------------------------------------- text

void write_trace_text(std::ostream& out, const ConversationTrace& trace) {
  trace.validate();
  json header = {
      {"format", "gatl"},
      {"version", kTraceVersion},
      {"model", trace.config.model_name},
      {"source", trace.config.source == ActivationSource::kAttentionOutput ? "attention" : "hidden"},
      {"hidden_dim", trace.config.hidden_dim},
      {"layers", trace.config.layers},
      {"label_width", trace.label_width},
      {"category", trace.category},
      {"ground_truth", trace.ground_truth},
  };
  out << header.dump() << '\n';
  for (const auto& t : trace.tokens) {
    json frame = {{"t", t.position}, {"text", t.text}, {"r", t.values}};
    if (!t.labels.empty()) {
      std::vector<std::uint32_t> on;
      for (std::size_t c = 0; c < t.labels.size(); ++c) {
        if (t.labels[c]) on.push_back(static_cast<std::uint32_t>(c));
      }
      frame["labels"] = on;
    }
    out << frame.dump() << '\n';
  }
}

ConversationTrace read_trace_text(std::istream& in, const std::optional<ActivationConfig>& expected) {
  ConversationTrace trace;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      auto j = json::parse(line);
      if (!have_header) {
        if (j.value("format", "") != "gatl") throw Error(Errc::kBadMagic, "not a .gatl trace");
        auto& cfg = trace.config;
        cfg.model_name = j.value("model", "");
        cfg.source = j.value("source", "attention") == "hidden" ? ActivationSource::kHiddenState
                                                                : ActivationSource::kAttentionOutput;
        cfg.hidden_dim = j.at("hidden_dim").get<std::uint32_t>();
        cfg.layers = j.at("layers").get<std::vector<std::uint32_t>>();
        trace.label_width = j.value("label_width", 0u);
        trace.category = j.value("category", "");
        if (j.contains("ground_truth")) {
          trace.ground_truth = j["ground_truth"].get<std::map<std::string, bool>>();
        }
        cfg.validate();
        check_expected(cfg, expected);
        have_header = true;
        continue;
      }
      TokenActivation t;
      t.position = j.at("t").get<std::uint64_t>();
      t.text = j.value("text", "");
      t.values = j.at("r").get<std::vector<float>>();
      if (j.contains("labels")) {
        t.labels.assign(trace.label_width, 0);
        for (auto c : j["labels"].get<std::vector<std::uint32_t>>()) {
          if (c >= trace.label_width) throw Error(Errc::kDimensionMismatch, "label id out of range");
          t.labels[c] = 1;
        }
      }
      trace.tokens.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::kConfigMismatch, "line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) throw Error(Errc::kBadMagic, "empty .gatl stream");
  trace.validate();
  return trace;
}

// ---------------------------------------------------------------- files

void save_trace(const fs::path& path, const ConversationTrace& trace) {
  bool text = path.extension() == ".gatl";
  write_file_atomic(
      path, [&](std::ostream& out) { text ? write_trace_text(out, trace) : write_trace(out, trace); },
      !text);
}

ConversationTrace load_trace(const fs::path& path, const std::optional<ActivationConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  try {
    return path.extension() == ".gatl" ? read_trace_text(in, expected) : read_trace(in, expected);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<fs::path> list_trace_files(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) throw Error(Errc::kIo, dir.string() + " is not a directory");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension();
    if (ext == ".gat" || ext == ".gatl") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cerule
