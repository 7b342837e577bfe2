// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// Stacked GRU with a per-token sigmoid head: the multi-label CE detector.
//
// Per layer, with gate rows ordered [reset | update | candidate]:
//   r  = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
//   z  = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
//   n  = tanh(W_in x + b_in + r * (W_hn h + b_hn))
//   h' = (1 - z) * n + z * h
// and the head is y = sigmoid(W_out h_top + b_out), one independent
// probability per CE (no softmax).

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cerule {

struct Architecture {
  std::size_t input_dim = 0;
  std::size_t num_layers = 3;
  std::size_t hidden = 256;
  std::size_t num_labels = 0;
  std::size_t segment_len = 5;

  void validate() const;
  bool operator==(const Architecture&) const = default;
};

struct TensorInfo {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;    // 1 for bias vectors
  std::size_t fan_in = 0;  // init scale: U(-1/sqrt(fan_in), 1/sqrt(fan_in))

  std::size_t size() const { return rows * cols; }
  bool operator==(const TensorInfo&) const = default;
};

/// All parameters live in one contiguous buffer in declared tensor order:
/// for each layer W_ih, W_hh, b_ih, b_hh; then W_out, b_out. The same type
/// doubles as the gradient and Adam-moment container.
template <typename T>
class GruNetwork {
 public:
  struct LayerView {
    const T* w_ih;  // 3H x in
    const T* w_hh;  // 3H x H
    const T* b_ih;  // 3H
    const T* b_hh;  // 3H
    std::size_t in;
  };

  GruNetwork() = default;
  /// Zero-initialized parameters.
  explicit GruNetwork(Architecture arch, std::vector<std::string> label_names = {});

  const Architecture& arch() const { return arch_; }
  const std::vector<std::string>& label_names() const { return label_names_; }
  void set_label_names(std::vector<std::string> names) { label_names_ = std::move(names); }

  std::span<T> params() { return params_; }
  std::span<const T> params() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }
  const std::vector<TensorInfo>& tensors() const { return layout_; }

  LayerView layer(std::size_t l) const;
  T* layer_tensor(std::size_t l, std::size_t which) { return params_.data() + layout_[4 * l + which].offset; }
  const T* w_out() const { return params_.data() + layout_[4 * arch_.num_layers].offset; }
  const T* b_out() const { return params_.data() + layout_[4 * arch_.num_layers + 1].offset; }
  T* w_out() { return params_.data() + layout_[4 * arch_.num_layers].offset; }
  T* b_out() { return params_.data() + layout_[4 * arch_.num_layers + 1].offset; }

  /// Same architecture, all-zero parameters.
  GruNetwork zeros_like() const { return GruNetwork(arch_, label_names_); }

  void fill(T value);

  bool operator==(const GruNetwork&) const = default;

 private:
  Architecture arch_;
  std::vector<std::string> label_names_;
  std::vector<TensorInfo> layout_;
  std::vector<T> params_;
};

using DetectorModel = GruNetwork<float>;
using DetectorModel64 = GruNetwork<double>;

extern template class GruNetwork<float>;
extern template class GruNetwork<double>;

template <typename To, typename From>
GruNetwork<To> cast_network(const GruNetwork<From>& src) {
  GruNetwork<To> out(src.arch(), src.label_names());
  auto s = src.params();
  auto d = out.params();
  for (std::size_t i = 0; i < s.size(); ++i) d[i] = static_cast<To>(s[i]);
  return out;
}

/// Uniform in +-sqrt(1/fan_in) per tensor from a seeded generator.
template <typename T>
void init_uniform(GruNetwork<T>& net, std::uint64_t seed);

/// Per-token probabilities for one segment of up to segment_len tokens; the
/// hidden state starts at zero. Throws kDimensionMismatch on a wrong-width
/// token and kNonFiniteValue on NaN/Inf input.
template <typename T, typename In>
std::vector<std::vector<T>> forward(const GruNetwork<T>& net,
                                    std::span<const std::span<const In>> segment);

/// Per-token inference over an unbounded stream. The hidden state resets to
/// zero every segment_len tokens so each token sees the same context as the
/// segments the model was trained on.
class StreamingDetector {
 public:
  explicit StreamingDetector(const DetectorModel& model);

  /// Probabilities for the next token; valid until the next call.
  std::span<const float> step(std::span<const float> activation);
  void reset();
  std::size_t num_labels() const { return model_->arch().num_labels; }

 private:
  const DetectorModel* model_;
  std::vector<std::vector<float>> hidden_;
  std::vector<float> gates_x_, gates_h_, input_, probs_;
  std::size_t step_in_segment_ = 0;
};

}  // namespace cerule
