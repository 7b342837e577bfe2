// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// Batched GRU cell shared by inference and training (internal header).

#pragma once

#include <algorithm>
#include <cmath>

#include "cerule/detector/gru.hpp"
#include "cerule/detector/kernels.hpp"

namespace cerule::detail {

/// Gate activations kept for backpropagation; any pointer may be null.
template <typename T>
struct CellTrace {
  T* r = nullptr;   // M x H
  T* z = nullptr;   // M x H
  T* n = nullptr;   // M x H
  T* hn = nullptr;  // M x H, W_hn h + b_hn
};

/// One step for M rows. `h_prev` null means a zero hidden state. `gx`/`gh`
/// are M x 3H scratch buffers.
template <typename T>
void cell_forward(const typename GruNetwork<T>::LayerView& L, std::size_t hidden, std::size_t m,
                  const T* x, const T* h_prev, T* h_out, T* gx, T* gh, CellTrace<T> trace = {}) {
  const std::size_t h3 = 3 * hidden;
  kernels::gemm_nt(m, h3, L.in, x, L.w_ih, gx, L.b_ih);
  if (h_prev) {
    kernels::gemm_nt(m, h3, hidden, h_prev, L.w_hh, gh, L.b_hh);
  } else {
    for (std::size_t i = 0; i < m; ++i) std::copy(L.b_hh, L.b_hh + h3, gh + i * h3);
  }
  for (std::size_t i = 0; i < m; ++i) {
    const T* ax = gx + i * h3;
    const T* ah = gh + i * h3;
    for (std::size_t j = 0; j < hidden; ++j) {
      const T r = kernels::sigmoid(ax[j] + ah[j]);
      const T z = kernels::sigmoid(ax[hidden + j] + ah[hidden + j]);
      const T hn = ah[2 * hidden + j];
      const T n = std::tanh(ax[2 * hidden + j] + r * hn);
      const T hp = h_prev ? h_prev[i * hidden + j] : T(0);
      h_out[i * hidden + j] = (T(1) - z) * n + z * hp;
      const std::size_t idx = i * hidden + j;
      if (trace.r) trace.r[idx] = r;
      if (trace.z) trace.z[idx] = z;
      if (trace.n) trace.n[idx] = n;
      if (trace.hn) trace.hn[idx] = hn;
    }
  }
}

/// probs[m x K] = sigmoid(h[m x H] W_out^T + b_out); logits optionally kept.
template <typename T>
void head_forward(const GruNetwork<T>& net, std::size_t m, const T* h, T* probs,
                  T* logits_out = nullptr) {
  const auto& a = net.arch();
  kernels::gemm_nt(m, a.num_labels, a.hidden, h, net.w_out(), probs, net.b_out());
  for (std::size_t i = 0; i < m * a.num_labels; ++i) {
    if (logits_out) logits_out[i] = probs[i];
    probs[i] = kernels::sigmoid(probs[i]);
  }
}

}  // namespace cerule::detail
