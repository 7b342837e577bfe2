// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// Detector training: BCE loss, backpropagation through time, Adam, and the
// epoch loop with a stratified train/validation split and early stopping.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cerule/detector/gru.hpp"
#include "cerule/traces/excitation.hpp"

namespace cerule {

/// Which token outputs of a segment carry the loss.
enum class LossTarget {
  kFinalToken,  // last valid token of each segment
  kAllTokens,   // every valid token
};

const char* loss_target_name(LossTarget t);
LossTarget parse_loss_target(const std::string& s);

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  GruNetwork<T> m;
  GruNetwork<T> v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(const GruNetwork<T>& like) : m(like.zeros_like()), v(like.zeros_like()) {}
};

/// Mean BCE over (segment, target token, label) for a batch; when `grads` is
/// non-null it is overwritten with d(loss)/d(params). Labels are the one-hot
/// of each segment's CE.
template <typename T>
T loss_and_gradients(const GruNetwork<T>& net, std::span<const ExcitationSegment* const> batch,
                     LossTarget target, GruNetwork<T>* grads);

/// Bias-corrected Adam update in place.
template <typename T>
void adam_step(GruNetwork<T>& net, const GruNetwork<T>& grads, AdamState<T>& state,
               const AdamConfig& cfg);

/// Scales `grads` so its global L2 norm is at most `max_norm` (no-op when
/// max_norm <= 0) and returns the norm before scaling. Throws
/// kNonFiniteGradient when the norm is not finite.
template <typename T>
double clip_global_norm(GruNetwork<T>& grads, double max_norm);

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  double split_ratio = 0.8;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;
  std::size_t patience = 5;  // 0 disables early stopping
  std::size_t hidden = 256;
  std::size_t num_layers = 3;
  LossTarget target = LossTarget::kAllTokens;

  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_bce = 0;
  double val_bce = 0;
  std::vector<double> val_accuracy;  // per CE, one-vs-rest at p >= 0.5
  double max_grad_norm = 0;
  std::size_t clipped_batches = 0;
};

struct TrainReport {
  TrainConfig config;
  std::vector<std::string> label_names;
  std::size_t train_segments = 0;
  std::size_t val_segments = 0;
  double initial_train_bce = 0;
  double initial_val_bce = 0;
  std::vector<EpochMetrics> epochs;
  std::size_t best_epoch = 0;  // 0 means the initial weights were never beaten
  bool stopped_early = false;
  std::vector<std::string> warnings;

  const EpochMetrics* best() const;
  std::string to_json() const;
};

struct TrainResult {
  DetectorModel model;
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Trains from scratch and returns the best-validation-loss checkpoint.
/// Throws kEmptyDataset, kInvalidConfig, kDimensionMismatch, kUnknownCe.
/// Degenerate labels are reported as warnings.
TrainResult train(std::span<const ExcitationSegment> dataset,
                  const std::vector<std::string>& label_names, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Stratified split: per CE, a seeded shuffle and the first round(ratio * n)
/// go to training (at least one on each side when n >= 2).
void stratified_split(std::span<const ExcitationSegment> dataset, std::size_t num_labels,
                      double ratio, std::uint64_t seed, std::vector<std::size_t>& train_idx,
                      std::vector<std::size_t>& val_idx);

/// One-vs-rest accuracy per CE at p >= 0.5 on the loss-target tokens.
std::vector<double> per_ce_accuracy(const DetectorModel& model,
                                    std::span<const ExcitationSegment* const> segments,
                                    LossTarget target);

}  // namespace cerule
