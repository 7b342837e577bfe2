// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/traces/activation.hpp"

#include <algorithm>
#include <cmath>

#include "cerule/common/error.hpp"

namespace cerule {

ActivationConfig ActivationConfig::default_for(std::string model_name, std::uint32_t hidden_dim) {
  ActivationConfig cfg;
  cfg.model_name = std::move(model_name);
  cfg.hidden_dim = hidden_dim;
  for (std::uint32_t l = 13; l <= 26; ++l) cfg.layers.push_back(l);
  return cfg;
}

void ActivationConfig::validate() const {
  if (hidden_dim == 0) throw Error(Errc::kInvalidConfig, "hidden_dim must be positive");
  if (layers.empty()) throw Error(Errc::kInvalidConfig, "layer set is empty");
  for (std::size_t i = 1; i < layers.size(); ++i) {
    if (layers[i] <= layers[i - 1]) {
      throw Error(Errc::kInvalidConfig, "layer set must be strictly increasing");
    }
  }
}

bool all_finite(std::span<const float> values) {
  return std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); });
}

void ConversationTrace::validate() const {
  config.validate();
  const auto dim = config.stacked_dim();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.values.size() != dim) {
      throw Error(Errc::kDimensionMismatch, "token " + std::to_string(i) + " has " +
                                                std::to_string(t.values.size()) +
                                                " values, expected " + std::to_string(dim));
    }
    if (!all_finite(t.values)) {
      throw Error(Errc::kNonFiniteValue, "token " + std::to_string(i) + " has a non-finite value");
    }
    if (i > 0 && t.position <= tokens[i - 1].position) {
      throw Error(Errc::kOutOfOrderToken, "token positions must be strictly increasing");
    }
    if (!t.labels.empty() && t.labels.size() != label_width) {
      throw Error(Errc::kDimensionMismatch, "token " + std::to_string(i) +
                                                " label width disagrees with trace");
    }
  }
}

TokenActivation stack_layers(
    std::span<const std::pair<std::uint32_t, std::vector<float>>> per_layer,
    const ActivationConfig& config, std::uint64_t position, std::string text) {
  config.validate();
  std::vector<const std::vector<float>*> slot(config.layers.size(), nullptr);
  for (const auto& [layer, vec] : per_layer) {
    auto it = std::lower_bound(config.layers.begin(), config.layers.end(), layer);
    if (it == config.layers.end() || *it != layer) {
      throw Error(Errc::kConfigMismatch,
                  "layer " + std::to_string(layer) + " is not in the configured layer set");
    }
    auto idx = static_cast<std::size_t>(it - config.layers.begin());
    if (slot[idx]) throw Error(Errc::kConfigMismatch, "layer " + std::to_string(layer) + " given twice");
    if (vec.size() != config.hidden_dim) {
      throw Error(Errc::kDimensionMismatch, "layer " + std::to_string(layer) + " has width " +
                                                std::to_string(vec.size()) + ", expected " +
                                                std::to_string(config.hidden_dim));
    }
    if (!all_finite(vec)) {
      throw Error(Errc::kNonFiniteValue, "layer " + std::to_string(layer) + " has a non-finite value");
    }
    slot[idx] = &vec;
  }
  TokenActivation out;
  out.position = position;
  out.text = std::move(text);
  out.values.reserve(config.stacked_dim());
  for (std::size_t i = 0; i < slot.size(); ++i) {
    if (!slot[i]) {
      throw Error(Errc::kMissingLayer, "layer " + std::to_string(config.layers[i]) + " missing");
    }
    out.values.insert(out.values.end(), slot[i]->begin(), slot[i]->end());
  }
  return out;
}

}  // namespace cerule
