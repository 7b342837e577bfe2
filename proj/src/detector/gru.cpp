// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/detector/gru.hpp"

#include <cmath>
#include "cerule/common/random.hpp"

#include "cerule/common/error.hpp"
#include "gru_cell.hpp"

namespace cerule {

void Architecture::validate() const {
  if (input_dim == 0 || num_layers == 0 || hidden == 0 || num_labels == 0 || segment_len == 0) {
    throw Error(Errc::kInvalidConfig, "architecture dimensions must all be positive");
  }
}

template <typename T>
GruNetwork<T>::GruNetwork(Architecture arch, std::vector<std::string> label_names)
    : arch_(arch), label_names_(std::move(label_names)) {
  arch_.validate();
  if (!label_names_.empty() && label_names_.size() != arch_.num_labels) {
    throw Error(Errc::kInvalidConfig, "label name count differs from num_labels");
  }
  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t rows, std::size_t cols, std::size_t fan_in) {
    layout_.push_back({std::move(name), offset, rows, cols, fan_in});
    offset += rows * cols;
  };
  const std::size_t h = arch_.hidden;
  for (std::size_t l = 0; l < arch_.num_layers; ++l) {
    const std::size_t in = l == 0 ? arch_.input_dim : h;
    auto p = "gru" + std::to_string(l) + ".";
    add(p + "w_ih", 3 * h, in, in);
    add(p + "w_hh", 3 * h, h, h);
    add(p + "b_ih", 3 * h, 1, in);
    add(p + "b_hh", 3 * h, 1, h);
  }
  add("head.w", arch_.num_labels, h, h);
  add("head.b", arch_.num_labels, 1, h);
  params_.assign(offset, T(0));
}

template <typename T>
typename GruNetwork<T>::LayerView GruNetwork<T>::layer(std::size_t l) const {
  const T* base = params_.data();
  return {base + layout_[4 * l].offset, base + layout_[4 * l + 1].offset,
          base + layout_[4 * l + 2].offset, base + layout_[4 * l + 3].offset,
          layout_[4 * l].cols};
}

template <typename T>
void GruNetwork<T>::fill(T value) {
  std::fill(params_.begin(), params_.end(), value);
}

template class GruNetwork<float>;
template class GruNetwork<double>;

template <typename T>
void init_uniform(GruNetwork<T>& net, std::uint64_t seed) {
  Rng rng(seed);
  auto params = net.params();
  for (const auto& t : net.tensors()) {
    const double bound = std::sqrt(1.0 / static_cast<double>(t.fan_in));
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double u = uniform01(rng);
      params[t.offset + i] = static_cast<T>((2.0 * u - 1.0) * bound);
    }
  }
}

template void init_uniform(GruNetwork<float>&, std::uint64_t);
template void init_uniform(GruNetwork<double>&, std::uint64_t);

template <typename T, typename In>
std::vector<std::vector<T>> forward(const GruNetwork<T>& net,
                                    std::span<const std::span<const In>> segment) {
  const auto& a = net.arch();
  if (segment.size() > a.segment_len) {
    throw Error(Errc::kDimensionMismatch, "segment has " + std::to_string(segment.size()) +
                                              " tokens, model takes at most " +
                                              std::to_string(a.segment_len));
  }
  const std::size_t h = a.hidden;
  std::vector<std::vector<T>> hidden(a.num_layers, std::vector<T>(h, T(0)));
  std::vector<T> next(h), gx(3 * h), gh(3 * h), x(a.input_dim);
  std::vector<std::vector<T>> out;
  out.reserve(segment.size());
  for (std::size_t t = 0; t < segment.size(); ++t) {
    const auto& tok = segment[t];
    if (tok.size() != a.input_dim) {
      throw Error(Errc::kDimensionMismatch, "token " + std::to_string(t) + " has width " +
                                                std::to_string(tok.size()) + ", model expects " +
                                                std::to_string(a.input_dim));
    }
    for (std::size_t i = 0; i < tok.size(); ++i) {
      if (!std::isfinite(static_cast<double>(tok[i]))) {
        throw Error(Errc::kNonFiniteValue, "non-finite activation in token " + std::to_string(t));
      }
      x[i] = static_cast<T>(tok[i]);
    }
    const T* input = x.data();
    for (std::size_t l = 0; l < a.num_layers; ++l) {
      detail::cell_forward<T>(net.layer(l), h, 1, input, t == 0 ? nullptr : hidden[l].data(),
                              next.data(), gx.data(), gh.data());
      hidden[l].swap(next);
      input = hidden[l].data();
    }
    std::vector<T> probs(a.num_labels);
    detail::head_forward(net, 1, input, probs.data());
    out.push_back(std::move(probs));
  }
  return out;
}

template std::vector<std::vector<float>> forward(const GruNetwork<float>&,
                                                 std::span<const std::span<const float>>);
template std::vector<std::vector<double>> forward(const GruNetwork<double>&,
                                                  std::span<const std::span<const double>>);
template std::vector<std::vector<double>> forward(const GruNetwork<double>&,
                                                  std::span<const std::span<const float>>);

StreamingDetector::StreamingDetector(const DetectorModel& model) : model_(&model) {
  const auto& a = model.arch();
  hidden_.assign(a.num_layers, std::vector<float>(a.hidden, 0.0f));
  gates_x_.resize(3 * a.hidden);
  gates_h_.resize(3 * a.hidden);
  input_.resize(a.hidden);
  probs_.resize(a.num_labels);
}

void StreamingDetector::reset() { step_in_segment_ = 0; }

std::span<const float> StreamingDetector::step(std::span<const float> activation) {
  const auto& a = model_->arch();
  if (activation.size() != a.input_dim) {
    throw Error(Errc::kDimensionMismatch, "activation width " + std::to_string(activation.size()) +
                                              ", model expects " + std::to_string(a.input_dim));
  }
  for (float v : activation) {
    if (!std::isfinite(v)) throw Error(Errc::kNonFiniteValue, "non-finite activation");
  }
  if (step_in_segment_ == a.segment_len) step_in_segment_ = 0;
  const bool fresh = step_in_segment_ == 0;
  const float* x = activation.data();
  for (std::size_t l = 0; l < a.num_layers; ++l) {
    detail::cell_forward<float>(model_->layer(l), a.hidden, 1, x, fresh ? nullptr : hidden_[l].data(),
                                input_.data(), gates_x_.data(), gates_h_.data());
    hidden_[l].swap(input_);
    x = hidden_[l].data();
  }
  detail::head_forward(*model_, 1, x, probs_.data());
  ++step_in_segment_;
  return probs_;
}

}  // namespace cerule
