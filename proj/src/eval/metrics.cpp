// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "cerule/common/error.hpp"

namespace cerule {

void Confusion::add(bool positive, bool detected) {
  if (positive) {
    ++(detected ? tp : fn);
  } else {
    ++(detected ? fp : tn);
  }
}

namespace {
double ratio(std::size_t a, std::size_t b) {
  return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
}

std::vector<ScoredLabel> sorted_desc(std::span<const ScoredLabel> items) {
  std::vector<ScoredLabel> v(items.begin(), items.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  return v;
}
}  // namespace

double Confusion::tpr() const { return ratio(tp, tp + fn); }
double Confusion::fpr() const { return ratio(fp, fp + tn); }
double Confusion::balanced_accuracy() const { return (tpr() + (1.0 - fpr())) / 2.0; }
double Confusion::f1() const { return ratio(2 * tp, 2 * tp + fp + fn); }

RocResult roc_auc(std::span<const ScoredLabel> items) {
  std::uint64_t p = 0, n = 0;
  for (const auto& it : items) ++(it.positive ? p : n);
  if (p == 0 || n == 0) {
    throw Error(Errc::kSingleClass, "ROC needs both positive and negative examples");
  }
  const auto v = sorted_desc(items);
  RocResult r;
  r.points.push_back({v.front().score, 0.0, 0.0});
  // Twice the area in units of one (positive, negative) pair.
  std::uint64_t area2 = 0, tp = 0, fp = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::uint64_t dtp = 0, dfp = 0;
    std::size_t j = i;
    for (; j < v.size() && v[j].score == v[i].score; ++j) ++(v[j].positive ? dtp : dfp);
    area2 += dfp * (2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    r.points.push_back({v[i].score, static_cast<double>(fp) / static_cast<double>(n),
                        static_cast<double>(tp) / static_cast<double>(p)});
    i = j;
  }
  // The (0,0) anchor sits above every score.
  r.points.front().threshold = std::nextafter(v.front().score, HUGE_VAL);
  r.auc = static_cast<double>(area2) / static_cast<double>(2 * p * n);
  return r;
}

ThresholdChoice youden_threshold(std::span<const ScoredLabel> items) {
  std::int64_t p = 0, n = 0;
  for (const auto& it : items) ++(it.positive ? p : n);
  ThresholdChoice best;
  if (p == 0 || n == 0) {
    best.fallback = true;
    return best;
  }
  const auto v = sorted_desc(items);
  std::int64_t tp = 0, fp = 0;
  bool have = false;
  std::int64_t best_tp = 0, best_fp = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    for (; j < v.size() && v[j].score == v[i].score; ++j) ++(v[j].positive ? tp : fp);
    // J1 > J0  <=>  tp1 * n - fp1 * p > tp0 * n - fp0 * p (all integers).
    if (!have || tp * n - fp * p > best_tp * n - best_fp * p) {
      have = true;
      best_tp = tp;
      best_fp = fp;
      best.threshold = v[i].score;
    }
    i = j;
  }
  best.tpr = static_cast<double>(best_tp) / static_cast<double>(p);
  best.fpr = static_cast<double>(best_fp) / static_cast<double>(n);
  return best;
}

}  // namespace cerule
