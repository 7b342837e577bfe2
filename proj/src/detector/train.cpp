// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/detector/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

#include "cerule/common/error.hpp"
#include "cerule/common/random.hpp"
#include "gru_cell.hpp"

namespace cerule {

const char* loss_target_name(LossTarget t) {
  return t == LossTarget::kFinalToken ? "final_token" : "all_tokens";
}

LossTarget parse_loss_target(const std::string& s) {
  if (s == "final_token" || s == "final") return LossTarget::kFinalToken;
  if (s == "all_tokens" || s == "all") return LossTarget::kAllTokens;
  throw Error(Errc::kInvalidConfig, "unknown loss target '" + s + "'");
}

namespace {

bool is_target(const ExcitationSegment& s, std::size_t t, LossTarget target) {
  if (t >= s.valid) return false;
  return target == LossTarget::kAllTokens || t + 1 == s.valid;
}

template <typename T>
struct LayerCache {
  std::vector<T> h, r, z, n, hn;  // each L x M x H, time-major
};

/// Activations of one batched forward pass, kept for the backward pass.
template <typename T>
struct Workspace {
  std::size_t m = 0, len = 0;
  std::vector<T> xs;  // L x M x D
  std::vector<LayerCache<T>> layers;
  std::vector<T> logits, probs;  // L x M x K
};

template <typename T>
void check_batch(const GruNetwork<T>& net, std::span<const ExcitationSegment* const> batch) {
  const auto& a = net.arch();
  if (batch.empty()) throw Error(Errc::kEmptyDataset, "empty batch");
  const std::size_t len = batch[0]->length;
  for (const auto* s : batch) {
    if (s->dim != a.input_dim) {
      throw Error(Errc::kDimensionMismatch, "segment width " + std::to_string(s->dim) +
                                                ", model expects " + std::to_string(a.input_dim));
    }
    if (s->length != len || s->data.size() != s->length * s->dim) {
      throw Error(Errc::kDimensionMismatch, "segments in a batch must share one length");
    }
    if (s->label >= a.num_labels && s->label != kNoCe) {
      throw Error(Errc::kUnknownCe, "segment label " + std::to_string(s->label) +
                                        " outside the model's " + std::to_string(a.num_labels) +
                                        " labels");
    }
  }
  if (len > a.segment_len) {
    throw Error(Errc::kDimensionMismatch, "segment length " + std::to_string(len) +
                                              " exceeds the model's " +
                                              std::to_string(a.segment_len));
  }
}

template <typename T>
void run_forward(const GruNetwork<T>& net, std::span<const ExcitationSegment* const> batch,
                 Workspace<T>& ws) {
  const auto& a = net.arch();
  const std::size_t m = batch.size(), len = batch[0]->length, d = a.input_dim, h = a.hidden;
  ws.m = m;
  ws.len = len;
  ws.xs.resize(len * m * d);
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      const float* row = batch[i]->data.data() + t * d;
      T* dst = ws.xs.data() + (t * m + i) * d;
      for (std::size_t k = 0; k < d; ++k) dst[k] = static_cast<T>(row[k]);
    }
  }
  ws.layers.resize(a.num_layers);
  std::vector<T> gx(m * 3 * h), gh(m * 3 * h);
  for (std::size_t l = 0; l < a.num_layers; ++l) {
    auto& c = ws.layers[l];
    for (auto* v : {&c.h, &c.r, &c.z, &c.n, &c.hn}) v->resize(len * m * h);
    const std::size_t in = l == 0 ? d : h;
    const T* inputs = l == 0 ? ws.xs.data() : ws.layers[l - 1].h.data();
    const auto view = net.layer(l);
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t off = t * m * h;
      detail::CellTrace<T> tr{c.r.data() + off, c.z.data() + off, c.n.data() + off,
                              c.hn.data() + off};
      detail::cell_forward<T>(view, h, m, inputs + t * m * in,
                              t == 0 ? nullptr : c.h.data() + off - m * h, c.h.data() + off,
                              gx.data(), gh.data(), tr);
    }
  }
  ws.logits.resize(len * m * a.num_labels);
  ws.probs.resize(len * m * a.num_labels);
  detail::head_forward(net, len * m, ws.layers.back().h.data(), ws.probs.data(),
                       ws.logits.data());
}

/// Summed BCE over target tokens and labels, plus the number of target
/// tokens. Fills dlogit (scaled by 1 / (count * K)) when given.
template <typename T>
double bce_sum(const Workspace<T>& ws, std::span<const ExcitationSegment* const> batch,
               std::size_t k_labels, LossTarget target, std::size_t& count,
               std::vector<T>* dlogit) {
  count = 0;
  for (std::size_t t = 0; t < ws.len; ++t) {
    for (const auto* s : batch) count += is_target(*s, t, target) ? 1 : 0;
  }
  double total = 0;
  if (dlogit) dlogit->assign(ws.logits.size(), T(0));
  const double scale = count ? 1.0 / static_cast<double>(count * k_labels) : 0.0;
  for (std::size_t t = 0; t < ws.len; ++t) {
    for (std::size_t i = 0; i < ws.m; ++i) {
      if (!is_target(*batch[i], t, target)) continue;
      const std::size_t base = (t * ws.m + i) * k_labels;
      for (std::size_t k = 0; k < k_labels; ++k) {
        const double x = static_cast<double>(ws.logits[base + k]);
        const double y = batch[i]->label == k ? 1.0 : 0.0;
        total += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
        if (dlogit) (*dlogit)[base + k] = static_cast<T>((ws.probs[base + k] - y) * scale);
      }
    }
  }
  return total;
}

template <typename T>
void backward(const GruNetwork<T>& net, const Workspace<T>& ws, const std::vector<T>& dlogit,
              GruNetwork<T>& g) {
  using namespace kernels;
  const auto& a = net.arch();
  const std::size_t m = ws.m, len = ws.len, h = a.hidden, h3 = 3 * h, k = a.num_labels;
  g.fill(T(0));

  const T* top = ws.layers.back().h.data();
  gemm_tn_acc(k, h, len * m, dlogit.data(), top, g.w_out());
  add_column_sums(len * m, k, dlogit.data(), g.b_out());
  std::vector<T> dh_above(len * m * h, T(0));
  gemm_nn_acc(len * m, h, k, dlogit.data(), net.w_out(), dh_above.data());

  std::vector<T> carry(m * h), dgi(m * h3), dgh(m * h3), dx;
  for (std::size_t l = a.num_layers; l-- > 0;) {
    const auto& c = ws.layers[l];
    const auto view = net.layer(l);
    const std::size_t in = view.in;
    const T* inputs = l == 0 ? ws.xs.data() : ws.layers[l - 1].h.data();
    T* gw_ih = g.layer_tensor(l, 0);
    T* gw_hh = g.layer_tensor(l, 1);
    T* gb_ih = g.layer_tensor(l, 2);
    T* gb_hh = g.layer_tensor(l, 3);
    if (l > 0) dx.assign(len * m * in, T(0));
    std::fill(carry.begin(), carry.end(), T(0));
    for (std::size_t t = len; t-- > 0;) {
      const std::size_t off = t * m * h;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < h; ++j) {
          const std::size_t idx = i * h + j;
          const T dh = dh_above[off + idx] + carry[idx];
          const T r = c.r[off + idx], z = c.z[off + idx], n = c.n[off + idx];
          const T hn = c.hn[off + idx];
          const T hp = t == 0 ? T(0) : c.h[off - m * h + idx];
          const T dn_pre = dh * (T(1) - z) * (T(1) - n * n);
          const T dz_pre = dh * (hp - n) * z * (T(1) - z);
          const T dr_pre = dn_pre * hn * r * (T(1) - r);
          T* gi = dgi.data() + i * h3;
          T* gh = dgh.data() + i * h3;
          gi[j] = dr_pre;
          gi[h + j] = dz_pre;
          gi[2 * h + j] = dn_pre;
          gh[j] = dr_pre;
          gh[h + j] = dz_pre;
          gh[2 * h + j] = dn_pre * r;
          carry[idx] = dh * z;
        }
      }
      gemm_tn_acc(h3, in, m, dgi.data(), inputs + t * m * in, gw_ih);
      add_column_sums(m, h3, dgi.data(), gb_ih);
      add_column_sums(m, h3, dgh.data(), gb_hh);
      if (t > 0) {
        gemm_tn_acc(h3, h, m, dgh.data(), c.h.data() + off - m * h, gw_hh);
        gemm_nn_acc(m, h, h3, dgh.data(), view.w_hh, carry.data());
      }
      if (l > 0) gemm_nn_acc(m, in, h3, dgi.data(), view.w_ih, dx.data() + t * m * in);
    }
    if (l > 0) dh_above.swap(dx);
  }
}

template <typename T>
double batch_loss(const GruNetwork<T>& net, std::span<const ExcitationSegment* const> batch,
                  LossTarget target, GruNetwork<T>* grads, std::size_t& count) {
  check_batch(net, batch);
  Workspace<T> ws;
  run_forward(net, batch, ws);
  std::vector<T> dlogit;
  const double total = bce_sum(ws, batch, net.arch().num_labels, target, count,
                               grads ? &dlogit : nullptr);
  if (grads) {
    if (grads->parameter_count() != net.parameter_count()) *grads = net.zeros_like();
    backward(net, ws, dlogit, *grads);
  }
  return total;
}

/// Mean BCE over a segment list, evaluated in chunks.
double mean_loss(const DetectorModel& net, std::span<const ExcitationSegment* const> segs,
                 LossTarget target) {
  constexpr std::size_t kChunk = 256;
  double total = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < segs.size(); i += kChunk) {
    std::size_t c = 0;
    total += batch_loss<float>(net, segs.subspan(i, std::min(kChunk, segs.size() - i)), target,
                               nullptr, c);
    count += c;
  }
  return count ? total / static_cast<double>(count * net.arch().num_labels) : 0.0;
}

}  // namespace

template <typename T>
T loss_and_gradients(const GruNetwork<T>& net, std::span<const ExcitationSegment* const> batch,
                     LossTarget target, GruNetwork<T>* grads) {
  std::size_t count = 0;
  const double total = batch_loss(net, batch, target, grads, count);
  if (count == 0) return T(0);
  return static_cast<T>(total / static_cast<double>(count * net.arch().num_labels));
}

template float loss_and_gradients(const GruNetwork<float>&,
                                  std::span<const ExcitationSegment* const>, LossTarget,
                                  GruNetwork<float>*);
template double loss_and_gradients(const GruNetwork<double>&,
                                   std::span<const ExcitationSegment* const>, LossTarget,
                                   GruNetwork<double>*);

template <typename T>
void adam_step(GruNetwork<T>& net, const GruNetwork<T>& grads, AdamState<T>& state,
               const AdamConfig& cfg) {
  if (grads.parameter_count() != net.parameter_count()) {
    throw Error(Errc::kDimensionMismatch, "gradient shape differs from the model");
  }
  if (state.m.parameter_count() != net.parameter_count()) state = AdamState<T>(net);
  ++state.step;
  const double step = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, step);
  const double c2 = 1.0 - std::pow(cfg.beta2, step);
  auto p = net.params();
  auto g = grads.params();
  auto m = state.m.params();
  auto v = state.v.params();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = static_cast<double>(g[i]);
    const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * gi;
    const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * gi * gi;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double update = cfg.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + cfg.epsilon);
    p[i] = static_cast<T>(static_cast<double>(p[i]) - update);
  }
}

template void adam_step(GruNetwork<float>&, const GruNetwork<float>&, AdamState<float>&,
                        const AdamConfig&);
template void adam_step(GruNetwork<double>&, const GruNetwork<double>&, AdamState<double>&,
                        const AdamConfig&);

template <typename T>
double clip_global_norm(GruNetwork<T>& grads, double max_norm) {
  double sq = 0;
  for (T g : grads.params()) sq += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw Error(Errc::kNonFiniteGradient, "gradient norm is not finite");
  if (max_norm > 0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (T& g : grads.params()) g = static_cast<T>(static_cast<double>(g) * s);
  }
  return norm;
}

template double clip_global_norm(GruNetwork<float>&, double);
template double clip_global_norm(GruNetwork<double>&, double);

void TrainConfig::validate() const {
  if (!(adam.learning_rate > 0)) throw Error(Errc::kInvalidConfig, "learning_rate must be > 0");
  if (!(split_ratio > 0 && split_ratio < 1)) {
    throw Error(Errc::kInvalidConfig, "split_ratio must lie strictly between 0 and 1");
  }
  if (!(adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 && adam.beta2 < 1)) {
    throw Error(Errc::kInvalidConfig, "adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0)) throw Error(Errc::kInvalidConfig, "adam epsilon must be > 0");
  if (batch_size == 0 || epochs == 0 || hidden == 0 || num_layers == 0) {
    throw Error(Errc::kInvalidConfig, "batch_size, epochs, hidden and num_layers must be positive");
  }
}

void stratified_split(std::span<const ExcitationSegment> dataset, std::size_t num_labels,
                      double ratio, std::uint64_t seed, std::vector<std::size_t>& train_idx,
                      std::vector<std::size_t>& val_idx) {
  // Background segments form their own stratum, last.
  std::vector<std::vector<std::size_t>> by_ce(num_labels + 1);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const CeId l = dataset[i].label;
    by_ce.at(l == kNoCe ? num_labels : l).push_back(i);
  }
  Rng rng(seed);
  train_idx.clear();
  val_idx.clear();
  for (auto& idx : by_ce) {
    shuffle(std::span(idx), rng);
    const std::size_t n = idx.size();
    auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    if (n >= 2) n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    else n_train = n;
    train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    val_idx.insert(val_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
}

std::vector<double> per_ce_accuracy(const DetectorModel& model,
                                    std::span<const ExcitationSegment* const> segments,
                                    LossTarget target) {
  const std::size_t k = model.arch().num_labels;
  std::vector<std::size_t> correct(k, 0);
  std::size_t total = 0;
  constexpr std::size_t kChunk = 256;
  for (std::size_t b = 0; b < segments.size(); b += kChunk) {
    auto batch = segments.subspan(b, std::min(kChunk, segments.size() - b));
    check_batch(model, batch);
    Workspace<float> ws;
    run_forward(model, batch, ws);
    for (std::size_t t = 0; t < ws.len; ++t) {
      for (std::size_t i = 0; i < ws.m; ++i) {
        if (!is_target(*batch[i], t, target)) continue;
        ++total;
        const float* p = ws.probs.data() + (t * ws.m + i) * k;
        for (std::size_t c = 0; c < k; ++c) {
          if ((p[c] >= 0.5f) == (batch[i]->label == c)) ++correct[c];
        }
      }
    }
  }
  std::vector<double> acc(k, 0.0);
  if (total == 0) return acc;
  for (std::size_t c = 0; c < k; ++c) {
    acc[c] = static_cast<double>(correct[c]) / static_cast<double>(total);
  }
  return acc;
}

const EpochMetrics* TrainReport::best() const {
  for (const auto& e : epochs) {
    if (e.epoch == best_epoch) return &e;
  }
  return nullptr;
}

std::string TrainReport::to_json() const {
  using nlohmann::json;
  json j;
  j["format"] = "cerule-train-report";
  j["config"] = {{"learning_rate", config.adam.learning_rate},
                 {"beta1", config.adam.beta1},
                 {"beta2", config.adam.beta2},
                 {"epsilon", config.adam.epsilon},
                 {"batch_size", config.batch_size},
                 {"epochs", config.epochs},
                 {"split_ratio", config.split_ratio},
                 {"seed", config.seed},
                 {"clip_norm", config.clip_norm},
                 {"patience", config.patience},
                 {"hidden", config.hidden},
                 {"num_layers", config.num_layers},
                 {"loss_target", loss_target_name(config.target)}};
  j["labels"] = label_names;
  j["train_segments"] = train_segments;
  j["val_segments"] = val_segments;
  j["initial_train_bce"] = initial_train_bce;
  j["initial_val_bce"] = initial_val_bce;
  json ep = json::array();
  for (const auto& e : epochs) {
    json acc = json::object();
    for (std::size_t c = 0; c < e.val_accuracy.size(); ++c) {
      acc[c < label_names.size() ? label_names[c] : std::to_string(c)] = e.val_accuracy[c];
    }
    ep.push_back({{"epoch", e.epoch},
                  {"train_bce", e.train_bce},
                  {"val_bce", e.val_bce},
                  {"val_accuracy", acc},
                  {"max_grad_norm", e.max_grad_norm},
                  {"clipped_batches", e.clipped_batches}});
  }
  j["epochs"] = ep;
  j["best_epoch"] = best_epoch;
  j["stopped_early"] = stopped_early;
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

namespace {

std::vector<std::string> label_warnings(std::span<const ExcitationSegment> dataset,
                                        const std::vector<std::string>& names) {
  const std::size_t k = names.size();
  std::vector<std::size_t> counts(k, 0);
  std::vector<const ExcitationSegment*> first(k, nullptr);
  std::vector<bool> constant(k, true);
  for (const auto& s : dataset) {
    if (s.label == kNoCe) continue;
    ++counts[s.label];
    if (!first[s.label]) {
      first[s.label] = &s;
    } else if (s.data != first[s.label]->data || s.valid != first[s.label]->valid) {
      constant[s.label] = false;
    }
  }
  std::vector<std::string> out;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) {
      out.push_back("CE " + names[c] + " has no training segments");
    } else if (counts[c] < 2) {
      out.push_back("CE " + names[c] + " has a single segment and no validation data");
    }
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      if (first[a] && first[b] && constant[a] && constant[b] &&
          first[a]->data == first[b]->data && first[a]->valid == first[b]->valid) {
        out.push_back("DegenerateLabels: CEs " + names[a] + " and " + names[b] +
                      " have identical constant inputs and cannot be separated");
      }
    }
  }
  return out;
}

std::vector<const ExcitationSegment*> pick(std::span<const ExcitationSegment> dataset,
                                           const std::vector<std::size_t>& idx) {
  std::vector<const ExcitationSegment*> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(&dataset[i]);
  return out;
}

}  // namespace

TrainResult train(std::span<const ExcitationSegment> dataset,
                  const std::vector<std::string>& label_names, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (dataset.empty()) throw Error(Errc::kEmptyDataset, "no training segments");
  if (label_names.empty()) throw Error(Errc::kInvalidConfig, "no labels");
  const std::size_t k = label_names.size();
  const std::size_t dim = dataset[0].dim, len = dataset[0].length;
  for (const auto& s : dataset) {
    if (s.dim != dim || s.length != len) {
      throw Error(Errc::kDimensionMismatch, "segments differ in width or length");
    }
    if (s.label >= k && s.label != kNoCe) {
      throw Error(Errc::kUnknownCe, "segment label " + std::to_string(s.label) +
                                        " has no vocabulary entry");
    }
  }

  TrainReport report;
  report.config = cfg;
  report.label_names = label_names;
  report.warnings = label_warnings(dataset, label_names);

  std::vector<std::size_t> train_idx, val_idx;
  stratified_split(dataset, k, cfg.split_ratio, cfg.seed, train_idx, val_idx);
  auto train_set = pick(dataset, train_idx);
  auto val_set = pick(dataset, val_idx);
  report.train_segments = train_set.size();
  report.val_segments = val_set.size();
  const bool has_val = !val_set.empty();
  if (!has_val) report.warnings.push_back("no validation segments; model selection uses training loss");
  const auto& select_set = has_val ? val_set : train_set;

  Architecture arch{dim, cfg.num_layers, cfg.hidden, k, len};
  DetectorModel model(arch, label_names);
  init_uniform(model, cfg.seed);
  AdamState<float> adam(model);
  DetectorModel grads = model.zeros_like();

  report.initial_train_bce = mean_loss(model, train_set, cfg.target);
  report.initial_val_bce = has_val ? mean_loss(model, val_set, cfg.target) : report.initial_train_bce;
  double best_loss = report.initial_val_bce;
  DetectorModel best = model;
  std::size_t since_best = 0;

  Rng order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<const ExcitationSegment*> order = train_set;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(std::span(order), order_rng);
    EpochMetrics em;
    em.epoch = epoch;
    double total = 0;
    std::size_t count = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      auto batch = std::span<const ExcitationSegment* const>(order).subspan(
          b, std::min(cfg.batch_size, order.size() - b));
      std::size_t c = 0;
      total += batch_loss<float>(model, batch, cfg.target, &grads, c);
      count += c;
      const double norm = clip_global_norm(grads, cfg.clip_norm);
      em.max_grad_norm = std::max(em.max_grad_norm, norm);
      if (cfg.clip_norm > 0 && norm > cfg.clip_norm) ++em.clipped_batches;
      adam_step(model, grads, adam, cfg.adam);
    }
    em.train_bce = count ? total / static_cast<double>(count * k) : 0.0;
    em.val_bce = mean_loss(model, select_set, cfg.target);
    em.val_accuracy = per_ce_accuracy(model, select_set, cfg.target);
    report.epochs.push_back(em);
    if (on_epoch) on_epoch(em);

    if (em.val_bce < best_loss) {
      best_loss = em.val_bce;
      best = model;
      report.best_epoch = epoch;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      report.stopped_early = epoch < cfg.epochs;
      break;
    }
  }
  return {std::move(best), std::move(report)};
}

}  // namespace cerule
