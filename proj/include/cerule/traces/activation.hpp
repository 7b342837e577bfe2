// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cerule {

enum class ActivationSource : std::uint16_t { kAttentionOutput = 0, kHiddenState = 1 };

/// Where per-token vectors come from: which layers were stacked, each of
/// width `hidden_dim`. The stacked width is layers.size() * hidden_dim.
struct ActivationConfig {
  std::string model_name;
  std::uint32_t hidden_dim = 0;
  std::vector<std::uint32_t> layers;
  ActivationSource source = ActivationSource::kAttentionOutput;

  std::size_t stacked_dim() const { return layers.size() * hidden_dim; }

  /// Layers 13..26 inclusive over the given width.
  static ActivationConfig default_for(std::string model_name, std::uint32_t hidden_dim);

  /// Throws kInvalidConfig on an empty or non-increasing layer list or zero width.
  void validate() const;

  bool operator==(const ActivationConfig&) const = default;
};

struct TokenActivation {
  std::vector<float> values;          // stacked vector r_t, length D
  std::string text;                   // optional token text for explanations
  std::uint64_t position = 0;
  std::vector<std::uint8_t> labels;   // optional per-CE ground truth (0/1), length K or empty

  bool operator==(const TokenActivation&) const = default;
};

struct ConversationTrace {
  ActivationConfig config;
  std::uint32_t label_width = 0;               // K when tokens carry labels, else 0
  std::string category;                        // misuse category, or empty
  std::map<std::string, bool> ground_truth;    // rule name -> violation
  std::vector<TokenActivation> tokens;

  /// Throws on dimension, finiteness, ordering or label-width violations.
  void validate() const;

  bool operator==(const ConversationTrace&) const = default;
};

/// Concatenates per-layer attention outputs in the config's layer order.
/// Errors: kMissingLayer, kDimensionMismatch, kNonFiniteValue,
/// kConfigMismatch (a layer outside the config or given twice).
TokenActivation stack_layers(
    std::span<const std::pair<std::uint32_t, std::vector<float>>> per_layer,
    const ActivationConfig& config, std::uint64_t position = 0, std::string text = {});

bool all_finite(std::span<const float> values);

}  // namespace cerule
