// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "cerule/common/error.hpp"
#include "cerule/common/random.hpp"
#include "cerule/synth/synthetic.hpp"
#include "cerule/traces/excitation.hpp"
#include "cerule/traces/trace_io.hpp"
#include "test_paths.hpp"

using namespace cerule;

namespace {

ConversationTrace random_trace(Rng& rng, std::size_t tokens, std::size_t k = 0) {
  ConversationTrace t;
  t.config.model_name = "tiny";
  t.config.hidden_dim = 3;
  t.config.layers = {2, 5, 9};
  t.config.source = ActivationSource::kHiddenState;
  t.label_width = static_cast<std::uint32_t>(k);
  t.category = "romance";
  t.ground_truth = {{"romance", true}, {"elections", false}};
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < tokens; ++i) {
    TokenActivation a;
    pos += 1 + uniform_below(rng, 3);
    a.position = pos;
    a.text = i % 7 == 0 ? "" : "w\"" + std::to_string(i) + "\n";
    for (std::size_t d = 0; d < t.config.stacked_dim(); ++d) {
      // Arbitrary finite bit patterns, including subnormals and negative zero.
      float v;
      do v = std::bit_cast<float>(static_cast<std::uint32_t>(rng())); while (!std::isfinite(v));
      a.values.push_back(v);
    }
    if (k) {
      for (std::size_t c = 0; c < k; ++c) a.labels.push_back(static_cast<std::uint8_t>(rng() & 1));
    }
    t.tokens.push_back(std::move(a));
  }
  return t;
}

bool bitwise_equal(const ConversationTrace& a, const ConversationTrace& b) {
  if (!(a.config == b.config) || a.tokens.size() != b.tokens.size()) return false;
  for (std::size_t i = 0; i < a.tokens.size(); ++i) {
    const auto& x = a.tokens[i].values;
    const auto& y = b.tokens[i].values;
    if (x.size() != y.size()) return false;
    for (std::size_t d = 0; d < x.size(); ++d) {
      if (std::bit_cast<std::uint32_t>(x[d]) != std::bit_cast<std::uint32_t>(y[d])) return false;
    }
  }
  return true;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kIo;
}

}  // namespace

TEST_SUITE("traces") {

TEST_CASE("stack_layers concatenates in layer order") {
  ActivationConfig cfg{"m", 4, {13, 14}, ActivationSource::kAttentionOutput};
  std::vector<std::pair<std::uint32_t, std::vector<float>>> per_layer = {
      {14, {5, 6, 7, 8}}, {13, {1, 2, 3, 4}}};
  auto t = stack_layers(per_layer, cfg);
  CHECK(t.values == std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(cfg.stacked_dim() == 8);

  per_layer[0].second[1] = std::numeric_limits<float>::quiet_NaN();
  CHECK(code_of([&] { stack_layers(per_layer, cfg); }) == Errc::kNonFiniteValue);
  per_layer[0].second[1] = 6;
  per_layer.pop_back();
  CHECK(code_of([&] { stack_layers(per_layer, cfg); }) == Errc::kMissingLayer);
  per_layer.push_back({13, {1, 2, 3}});
  CHECK(code_of([&] { stack_layers(per_layer, cfg); }) == Errc::kDimensionMismatch);
}

TEST_CASE("default layer range") {
  auto cfg = ActivationConfig::default_for("m", 4096);
  REQUIRE(cfg.layers.size() == 14);
  CHECK(cfg.layers.front() == 13);
  CHECK(cfg.layers.back() == 26);
  CHECK(cfg.stacked_dim() == 14u * 4096u);
  CHECK(cfg.stacked_dim() == 57344u);
  CHECK(cfg.source == ActivationSource::kAttentionOutput);
}

TEST_CASE("stacking is injective") {
  Rng rng(3);
  ActivationConfig cfg{"m", 2, {0, 1}, ActivationSource::kAttentionOutput};
  for (int i = 0; i < 200; ++i) {
    std::vector<std::pair<std::uint32_t, std::vector<float>>> a = {
        {0, {float(uniform_below(rng, 3)), float(uniform_below(rng, 3))}},
        {1, {float(uniform_below(rng, 3)), float(uniform_below(rng, 3))}}};
    auto b = a;
    b[uniform_below(rng, 2)].second[uniform_below(rng, 2)] += 1;
    CHECK(stack_layers(a, cfg).values != stack_layers(b, cfg).values);
  }
}

TEST_CASE("binary round trip is bitwise") {
  Rng rng(4);
  for (std::size_t k : {std::size_t{0}, std::size_t{5}}) {
    for (int rep = 0; rep < 20; ++rep) {
      auto t = random_trace(rng, 100, k);
      std::stringstream s;
      write_trace(s, t);
      auto back = read_trace(s);
      CHECK(bitwise_equal(t, back));
      CHECK(back.category == t.category);
      CHECK(back.ground_truth == t.ground_truth);
      CHECK(back.label_width == t.label_width);
      for (std::size_t i = 0; i < t.tokens.size(); ++i) {
        REQUIRE(back.tokens[i].text == t.tokens[i].text);
        REQUIRE(back.tokens[i].position == t.tokens[i].position);
        REQUIRE(back.tokens[i].labels == t.tokens[i].labels);
      }
    }
  }
}

TEST_CASE("text round trip") {
  Rng rng(5);
  auto t = random_trace(rng, 30, 3);
  std::stringstream s;
  write_trace_text(s, t);
  auto back = read_trace_text(s);
  CHECK(bitwise_equal(t, back));
  CHECK(back == t);
}

TEST_CASE("empty trace") {
  Rng rng(6);
  auto t = random_trace(rng, 0);
  std::stringstream s;
  write_trace(s, t);
  CHECK(read_trace(s).tokens.empty());
}

TEST_CASE("truncated frame names its byte offset") {
  Rng rng(7);
  auto t = random_trace(rng, 4);
  std::stringstream s;
  write_trace(s, t);
  const std::string full = s.str();
  // Drop the end marker and half of the last frame.
  const std::string cut = full.substr(0, full.size() - 4 - 10);
  std::istringstream in(cut);
  try {
    read_trace(in);
    FAIL("expected truncation");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kTruncatedFrame);
    CHECK(std::string(e.what()).find("byte offset " + std::to_string(cut.size())) !=
          std::string::npos);
  }
  // A stream cut exactly between frames also lacks the end marker.
  std::istringstream no_marker(full.substr(0, full.size() - 4));
  CHECK(code_of([&] { read_trace(no_marker); }) == Errc::kTruncatedFrame);
}

TEST_CASE("bad magic and config mismatch") {
  std::istringstream junk("NOPE and more bytes here");
  CHECK(code_of([&] { read_trace(junk); }) == Errc::kBadMagic);

  Rng rng(8);
  auto t = random_trace(rng, 2);
  std::stringstream s;
  write_trace(s, t);
  auto other = t.config;
  other.layers = {1, 2, 3};
  CHECK(code_of([&] { read_trace(s, other); }) == Errc::kConfigMismatch);
}

TEST_CASE("streaming reader yields frames one by one") {
  Rng rng(9);
  auto t = random_trace(rng, 3);
  std::stringstream s;
  TraceWriter w(s, {t.config, 0, t.category, t.ground_truth});
  for (const auto& tok : t.tokens) w.write(tok);
  w.finish();
  TraceReader r(s);
  CHECK(r.header().config == t.config);
  std::size_t n = 0;
  while (auto tok = r.next()) {
    CHECK(tok->values == t.tokens[n].values);
    ++n;
  }
  CHECK(n == 3);
}

TEST_CASE("writer rejects non-finite values") {
  Rng rng(10);
  auto t = random_trace(rng, 1);
  t.tokens[0].values[0] = std::numeric_limits<float>::infinity();
  std::stringstream s;
  CHECK(code_of([&] { write_trace(s, t); }) == Errc::kNonFiniteValue);
}

TEST_CASE("segments are zero padded with a validity count") {
  ConversationTrace t;
  t.config = synth::synthetic_config(2);
  for (std::uint64_t i = 0; i < 7; ++i) {
    t.tokens.push_back({{float(i), float(-i)}, "", i, {}});
  }
  auto segs = segment_trace(t, 3);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].valid == 5);
  CHECK(segs[1].valid == 2);
  CHECK(segs[1].data.size() == 10);
  CHECK(segs[1].row(1)[0] == 6.0f);
  CHECK(segs[1].row(2)[0] == 0.0f);
  CHECK(segs[1].label == 3);
  CHECK(segs[0].one_hot(4) == std::vector<float>{0, 0, 0, 1});
}

TEST_CASE("excitation directory layout") {
  TempDir dir("excitation");
  const auto vocab = synth::synthetic_vocabulary(3);
  Rng rng(11);
  synth::ClusterSpace space{8, 3, 6.0, 1.0};
  auto make = [&](std::vector<CeId> ces, std::size_t n) {
    std::vector<ConversationTrace> out;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<synth::Injection> inj;
      if (!ces.empty()) inj.push_back({ces, 0, 5});
      out.push_back(synth::make_trace(space, 5, inj, rng));
    }
    return out;
  };
  save_excitation_traces(dir.path(), vocab, 0, make({0}, 2));
  save_excitation_traces(dir.path(), vocab, 2, make({2}, 3));
  save_excitation_traces(dir.path(), vocab, kNoCe, make({}, 1));
  auto segs = load_excitation_dir(dir.path(), vocab);
  CHECK(segs.size() == 6);
  std::size_t background = 0;
  for (const auto& s : segs) background += s.label == kNoCe ? 1 : 0;
  CHECK(background == 1);
  for (const auto& s : segs) {
    if (s.label == kNoCe) CHECK(s.one_hot(3) == std::vector<float>{0, 0, 0});
  }

  TempDir empty("empty_excitation");
  CHECK(code_of([&] { load_excitation_dir(empty.path(), vocab); }) == Errc::kEmptyDataset);
  std::filesystem::create_directories(empty / "topic:unknown");
  CHECK(code_of([&] { load_excitation_dir(empty.path(), vocab); }) == Errc::kUnknownCe);
}

}  // TEST_SUITE
