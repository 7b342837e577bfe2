// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// Detection metrics, ROC analysis and threshold calibration.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cerule {

struct ScoredLabel {
  double score = 0;
  bool positive = false;
};

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  void add(bool positive, bool detected);
  /// Rates are 0 when their denominator is empty.
  double tpr() const;
  double fpr() const;
  double balanced_accuracy() const;  // (TPR + TNR) / 2
  double f1() const;                 // 2TP / (2TP + FP + FN)

  bool operator==(const Confusion&) const = default;
};

struct RocPoint {
  double threshold = 0;  // predict positive when score >= threshold
  double fpr = 0;
  double tpr = 0;
};

struct RocResult {
  double auc = 0;
  /// From (0,0) through one point per distinct score, descending.
  std::vector<RocPoint> points;
};

/// Trapezoidal AUC of the tie-grouped threshold sweep; numerically it is
/// (2 * concordant + tied) / (2 * P * N) evaluated as one division, so it is
/// identical to the pair-count estimator. Throws kSingleClass.
RocResult roc_auc(std::span<const ScoredLabel> items);

struct ThresholdChoice {
  double threshold = 0.5;
  double tpr = 0;
  double fpr = 0;
  bool fallback = false;  // single-class input: default 0.5 kept
};

/// Maximizes Youden's J = TPR - FPR over the distinct scores (threshold t
/// means score >= t). Ties go to the highest threshold. Single-class input
/// returns the 0.5 default with `fallback` set.
ThresholdChoice youden_threshold(std::span<const ScoredLabel> items);

}  // namespace cerule
