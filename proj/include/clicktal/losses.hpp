// Copyright 2026 The clicktal Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Training objectives. Every loss returns its value together with the
// gradient w.r.t. its tensor inputs (class activation sequences, embeddings
// or attention logits).

#include "clicktal/common.hpp"
#include "clicktal/network.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace clicktal {

inline Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector p = (logits.array() - m).exp();
  return p / p.sum();
}

inline Vector log_softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  const Vector shifted = logits.array() - m;
  return shifted.array() - std::log(shifted.array().exp().sum());
}

/// -sum_c target_c log softmax(logits)_c; writes d/dlogits when asked.
inline double softmax_cross_entropy(const Vector& logits, const Vector& target, Vector* dlogits = nullptr) {
  const Vector lsm = log_softmax(logits);
  double loss = 0.0;
  for (Eigen::Index c = 0; c < logits.size(); ++c)
    if (target(c) != 0.0) loss -= target(c) * lsm(c);
  if (dlogits != nullptr) *dlogits = lsm.array().exp().matrix() * target.sum() - target;
  return loss;
}

/// Video-level target for one branch: the ground-truth classes plus, on the
/// base branch, the background bit; normalised to sum to one.
inline Vector branch_target(const std::vector<int>& labels, bool background_bit) {
  Vector y = Vector::Zero(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t c = 1; c < labels.size(); ++c) y(static_cast<Eigen::Index>(c)) = labels[c] != 0 ? 1.0 : 0.0;
  if (background_bit) y(0) = 1.0;
  const double s = y.sum();
  if (s > 0.0) y /= s;
  return y;
}

struct AggregatedScores {
  Vector scores;                        // C+1 top-k means
  std::vector<std::vector<int>> topk;   // per class
};

inline AggregatedScores aggregate_scores(const Matrix& s, int k) {
  AggregatedScores out;
  out.scores.resize(s.rows());
  out.topk.resize(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index c = 0; c < s.rows(); ++c) {
    auto tk = topk_aggregate(s.row(c), k);
    out.scores(c) = tk.value;
    out.topk[static_cast<std::size_t>(c)] = std::move(tk.indices);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Video-level classification

struct VideoClsLoss {
  double value = 0.0;
  double base = 0.0;
  double supp = 0.0;
  Matrix ds_base;
  Matrix ds_supp;  // empty when no suppressed branch was given
};

namespace detail {

inline double branch_cls_loss(const Matrix& s, const Vector& target, int k, Matrix& ds) {
  const auto agg = aggregate_scores(s, k);
  Vector dscore;
  const double loss = softmax_cross_entropy(agg.scores, target, &dscore);
  ds = Matrix::Zero(s.rows(), s.cols());
  for (Eigen::Index c = 0; c < s.rows(); ++c)
    for (int t : agg.topk[static_cast<std::size_t>(c)]) ds(c, t) = dscore(c) / k;
  return loss;
}

}  // namespace detail

/// Cross-entropy of the softmaxed top-k scores against the branch targets,
/// summed over the base and (when given) suppressed branches.
inline VideoClsLoss video_cls_loss(const Matrix& s_base, const Matrix* s_supp, const std::vector<int>& labels, int k) {
  require(static_cast<Eigen::Index>(labels.size()) == s_base.rows(), "video_cls_loss: label size mismatch");
  VideoClsLoss out;
  out.base = detail::branch_cls_loss(s_base, branch_target(labels, true), k, out.ds_base);
  if (s_supp != nullptr) out.supp = detail::branch_cls_loss(*s_supp, branch_target(labels, false), k, out.ds_supp);
  out.value = out.base + out.supp;
  return out;
}

// ---------------------------------------------------------------------------
// Frame-level classification

struct FrameTarget {
  int frame = 0;
  int class_id = 0;
};

inline std::vector<FrameTarget> background_targets(const std::vector<int>& clicks) {
  std::vector<FrameTarget> out;
  for (std::size_t t = 0; t < clicks.size(); ++t)
    if (clicks[t] == kBackground) out.push_back({static_cast<int>(t), 0});
  return out;
}

struct FrameClsLoss {
  double value = 0.0;
  Matrix ds;
};

/// Mean cross-entropy at the clicked frames; zero when nothing is clicked.
inline FrameClsLoss frame_cls_loss(const Matrix& s, const std::vector<FrameTarget>& targets) {
  FrameClsLoss out;
  out.ds = Matrix::Zero(s.rows(), s.cols());
  if (targets.empty()) return out;
  const double n = static_cast<double>(targets.size());
  for (const auto& ft : targets) {
    require(ft.frame >= 0 && ft.frame < s.cols() && ft.class_id >= 0 && ft.class_id < s.rows(),
            "frame_cls_loss: target out of range");
    const Vector lsm = log_softmax(s.col(ft.frame));
    out.value -= lsm(ft.class_id) / n;
    Vector g = lsm.array().exp();
    g(ft.class_id) -= 1.0;
    out.ds.col(ft.frame) += g / n;
  }
  return out;
}

inline FrameClsLoss frame_cls_loss(const Matrix& s, const std::vector<int>& clicks) {
  require(static_cast<Eigen::Index>(clicks.size()) == s.cols(), "frame_cls_loss: click size mismatch");
  return frame_cls_loss(s, background_targets(clicks));
}

// ---------------------------------------------------------------------------
// Score separation

/// -log p̂_act - log(1 - p̂_bg) with (p̂_act, p̂_bg) the two-way softmax of
/// the mean scores. Writes d/dp_act (d/dp_bg is its negative).
inline double separation_term(double p_act, double p_bg, double* d_act = nullptr) {
  const double diff = p_act - p_bg;
  // log p̂_act = -softplus(-diff); 1 - p̂_bg equals p̂_act.
  const double softplus = diff > 0.0 ? std::log1p(std::exp(-diff)) : -diff + std::log1p(std::exp(diff));
  if (d_act != nullptr) *d_act = -2.0 * detail::sigmoid(-diff);
  return 2.0 * softplus;
}

struct SeparationLoss {
  double value = 0.0;
  Matrix ds;
  std::vector<int> classes;
  std::vector<double> p_act;
  std::vector<double> p_bg;
};

/// Per ground-truth class: mean raw top-k score vs. mean raw score at the
/// clicked background frames, pushed apart; averaged over classes.
inline SeparationLoss score_separation_loss(const Matrix& s, const std::vector<int>& labels,
                                            const std::vector<int>& clicks, int k) {
  require(static_cast<Eigen::Index>(labels.size()) == s.rows(), "score_separation_loss: label size mismatch");
  require(static_cast<Eigen::Index>(clicks.size()) == s.cols(), "score_separation_loss: click size mismatch");
  SeparationLoss out;
  out.ds = Matrix::Zero(s.rows(), s.cols());
  std::vector<int> bg;
  for (std::size_t t = 0; t < clicks.size(); ++t)
    if (clicks[t] == kBackground) bg.push_back(static_cast<int>(t));
  for (std::size_t c = 1; c < labels.size(); ++c)
    if (labels[c] != 0) out.classes.push_back(static_cast<int>(c));
  if (bg.empty() || out.classes.empty()) return out;

  const double n_cls = static_cast<double>(out.classes.size());
  for (int c : out.classes) {
    const auto tk = topk_aggregate(s.row(c), k);
    double p_bg = 0.0;
    for (int t : bg) p_bg += s(c, t);
    p_bg /= static_cast<double>(bg.size());
    double d_act = 0.0;
    out.value += separation_term(tk.value, p_bg, &d_act) / n_cls;
    out.p_act.push_back(tk.value);
    out.p_bg.push_back(p_bg);
    for (int t : tk.indices) out.ds(c, t) += d_act / n_cls / k;
    for (int t : bg) out.ds(c, t) -= d_act / n_cls / static_cast<double>(bg.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Affinity

struct HardPair {
  int u = -1;
  int v = -1;
  double similarity = 0.0;
  double hinge = 0.0;
  bool found() const { return u >= 0; }
};

struct AffinityLoss {
  double value = 0.0;
  HardPair background;  // least similar clicked-background pair
  HardPair action;      // least similar pseudo-action pair
  HardPair cross;       // most similar background / action pair
  Matrix de;
};

namespace detail {

// Largest hinge over the candidate pairs; the first maximal pair in
// enumeration order wins.
template <class Hinge>
HardPair hardest_pair(const Matrix& e, const std::vector<int>& left, const std::vector<int>& right, bool same_set,
                      Hinge hinge) {
  HardPair best;
  for (std::size_t i = 0; i < left.size(); ++i) {
    for (std::size_t j = same_set ? i + 1 : 0; j < right.size(); ++j) {
      const double sim = cosine_affinity(e, left[i], right[j]);
      const double h = hinge(sim);
      if (!best.found() || h > best.hinge) best = {left[i], right[j], sim, h};
    }
  }
  return best;
}

}  // namespace detail

/// Hard-example hinge losses on embedding similarities: background pairs and
/// pseudo-action pairs should exceed `tau_same`, cross pairs should stay
/// below `tau_diff`. Sets with fewer than two members (one for cross pairs)
/// contribute nothing.
inline AffinityLoss affinity_loss(const Matrix& e, const std::vector<int>& frame_labels, double tau_same,
                                  double tau_diff) {
  require(static_cast<Eigen::Index>(frame_labels.size()) == e.cols(), "affinity_loss: label size mismatch");
  std::vector<int> bg, act;
  for (std::size_t t = 0; t < frame_labels.size(); ++t) {
    if (frame_labels[t] == kBackground) bg.push_back(static_cast<int>(t));
    if (frame_labels[t] == kPseudoAction) act.push_back(static_cast<int>(t));
  }
  AffinityLoss out;
  out.de = Matrix::Zero(e.rows(), e.cols());
  auto pull = [&](double sim) { return std::max(0.0, tau_same - sim); };
  auto push = [&](double sim) { return std::max(0.0, sim - tau_diff); };
  out.background = detail::hardest_pair(e, bg, bg, true, pull);
  out.action = detail::hardest_pair(e, act, act, true, pull);
  out.cross = detail::hardest_pair(e, bg, act, false, push);
  // Hinge kinks take the zero side.
  if (out.background.hinge > 0.0) cosine_affinity_backward(e, out.background.u, out.background.v, -1.0, out.de);
  if (out.action.hinge > 0.0) cosine_affinity_backward(e, out.action.u, out.action.v, -1.0, out.de);
  if (out.cross.hinge > 0.0) cosine_affinity_backward(e, out.cross.u, out.cross.v, 1.0, out.de);
  out.value = out.background.hinge + out.action.hinge + out.cross.hinge;
  return out;
}

// ---------------------------------------------------------------------------
// Attention weight supervision (ablation variant)

struct WeightSupervisionLoss {
  double value = 0.0;
  Vector d_logit;
};

/// Binary cross-entropy pushing the attention weight towards 0 at clicked
/// background frames, computed from the logits for stability.
inline WeightSupervisionLoss weight_supervision_loss(const Vector& logits, const std::vector<int>& clicks) {
  require(static_cast<Eigen::Index>(clicks.size()) == logits.size(), "weight_supervision_loss: size mismatch");
  WeightSupervisionLoss out;
  out.d_logit = Vector::Zero(logits.size());
  const auto targets = background_targets(clicks);
  if (targets.empty()) return out;
  const double n = static_cast<double>(targets.size());
  for (const auto& ft : targets) {
    const double u = logits(ft.frame);
    out.value += (u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u))) / n;
    out.d_logit(ft.frame) = detail::sigmoid(u) / n;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Composition

struct LossReport {
  double l_cls = 0.0;
  double l_frame = 0.0;
  double l_sep = 0.0;
  double l_aff = 0.0;
  double l_wsup = 0.0;
  double total = 0.0;
  std::vector<double> p_act;
  std::vector<double> p_bg;
};

/// L = L_cls + L_frame + lambda * L_sep + beta * L_aff (+ L_wsup when the
/// weight-supervision variant is on).
inline LossReport total_loss(double l_cls, double l_frame, double l_sep, double l_aff, double lambda, double beta,
                             double l_wsup = 0.0) {
  require(lambda >= 0.0 && beta >= 0.0, "total_loss: coefficients must be non-negative");
  LossReport r;
  r.l_cls = l_cls;
  r.l_frame = l_frame;
  r.l_sep = l_sep;
  r.l_aff = l_aff;
  r.l_wsup = l_wsup;
  r.total = l_cls + l_frame + lambda * l_sep + beta * l_aff + l_wsup;
  return r;
}

}  // namespace clicktal
