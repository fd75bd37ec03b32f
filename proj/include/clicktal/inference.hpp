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

// Class activation sequence -> action instances: video-level class
// thresholding, multi-threshold grouping of high-scoring frames,
// outer-inner-contrastive confidence and class-wise NMS.

#include "clicktal/common.hpp"
#include "clicktal/losses.hpp"
#include "clicktal/network.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace clicktal {

struct DetectedInstance {
  std::string video_id;
  double t_start = 0.0;
  double t_end = 0.0;
  int class_id = 1;
  double score = 0.0;

  friend bool operator==(const DetectedInstance&, const DetectedInstance&) = default;
};

struct InferenceConfig {
  double tau_cls = 0.25;
  std::vector<double> seg_thresholds = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
  double nms_tiou = 0.5;
  double inflation = 0.25;
  double k_ratio = 1.0 / 8.0;

  void validate() const {
    require(!seg_thresholds.empty(), "InferenceConfig: need at least one segment threshold");
    require(inflation > 0.0 && inflation <= 1.0, "InferenceConfig: inflation must be in (0, 1]");
    require(nms_tiou > 0.0 && nms_tiou <= 1.0, "InferenceConfig: nms_tiou must be in (0, 1]");
  }
};

/// Frame span [start, end) with a confidence.
struct Candidate {
  int start = 0;
  int end = 0;
  double score = 0.0;
};

inline double frame_tiou(const Candidate& a, const Candidate& b) {
  const int inter = std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const int uni = (a.end - a.start) + (b.end - b.start) - inter;
  return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

/// Inner mean over [t_s, t_e) minus the mean over the two flanks of
/// ceil(inflation * length) frames each, clipped to the sequence. Without
/// any outer frame the score is the inner mean.
inline double oic_score(const RowVector& row, int t_s, int t_e, double inflation) {
  const int T = static_cast<int>(row.size());
  require(0 <= t_s && t_s < t_e && t_e <= T, "oic_score: need 0 <= t_s < t_e <= T");
  require(inflation > 0.0 && inflation <= 1.0, "oic_score: inflation must be in (0, 1]");
  const double inner = row.segment(t_s, t_e - t_s).mean();
  const int flank = static_cast<int>(std::ceil(inflation * (t_e - t_s)));
  const int left = std::max(0, t_s - flank);
  const int right = std::min(T, t_e + flank);
  const int n_outer = (t_s - left) + (right - t_e);
  if (n_outer == 0) return inner;
  const double outer = row.segment(left, t_s - left).sum() + row.segment(t_e, right - t_e).sum();
  return inner - outer / n_outer;
}

/// Maximal runs of frames with value strictly above `theta`, as [start, end).
inline std::vector<std::pair<int, int>> threshold_runs(const RowVector& row, double theta) {
  std::vector<std::pair<int, int>> runs;
  const int T = static_cast<int>(row.size());
  int t = 0;
  while (t < T) {
    if (row(t) > theta) {
      int e = t;
      while (e < T && row(e) > theta) ++e;
      runs.emplace_back(t, e);
      t = e;
    } else {
      ++t;
    }
  }
  return runs;
}

/// Greedy suppression by descending score (ties: earlier start); drops any
/// candidate whose tIoU with a kept one reaches `tiou_threshold`.
inline std::vector<Candidate> nms(std::vector<Candidate> candidates, double tiou_threshold) {
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.score > b.score || (a.score == b.score && a.start < b.start);
  });
  std::vector<Candidate> kept;
  for (const auto& c : candidates) {
    bool keep = true;
    for (const auto& k : kept)
      if (frame_tiou(c, k) >= tiou_threshold) {
        keep = false;
        break;
      }
    if (keep) kept.push_back(c);
  }
  return kept;
}

inline RowVector min_max_normalize(const RowVector& row) {
  const double lo = row.minCoeff();
  const double hi = row.maxCoeff();
  if (!(hi > lo)) return RowVector::Zero(row.size());
  return (row.array() - lo) / (hi - lo);
}

/// Candidates of one class from its raw CAS row, after NMS.
inline std::vector<Candidate> localize_class(const RowVector& cas_row, const InferenceConfig& cfg) {
  const RowVector norm = min_max_normalize(cas_row);
  std::vector<Candidate> pool;
  for (double theta : cfg.seg_thresholds)
    for (const auto& [s, e] : threshold_runs(norm, theta)) pool.push_back({s, e, oic_score(norm, s, e, cfg.inflation)});
  return nms(std::move(pool), cfg.nms_tiou);
}

/// Softmax of the top-k aggregated scores.
inline Vector video_scores(const Matrix& cas, int k) { return softmax(aggregate_scores(cas, k).scores); }

inline std::vector<DetectedInstance> localize_cas(const Matrix& cas, const Vector& class_scores,
                                                  const InferenceConfig& cfg, double duration_sec,
                                                  const std::string& video_id = {}) {
  cfg.validate();
  require(duration_sec > 0.0, "localize: duration must be positive");
  const int T = static_cast<int>(cas.cols());
  std::vector<DetectedInstance> out;
  for (Eigen::Index c = 1; c < cas.rows(); ++c) {
    if (class_scores(c) < cfg.tau_cls) continue;
    for (const auto& cand : localize_class(cas.row(c), cfg))
      out.push_back({video_id, cand.start * duration_sec / T, cand.end * duration_sec / T, static_cast<int>(c),
                     cand.score});
  }
  return out;
}

/// Runs the network and localizes on the suppressed-branch CAS.
inline std::vector<DetectedInstance> localize(const ModelParams& params, const Matrix& x, const ForwardOptions& fwd,
                                              const InferenceConfig& cfg, double duration_sec,
                                              const std::string& video_id = {}) {
  const auto st = forward_cas(params, x, fwd);
  const int k = std::max(1, static_cast<int>(std::floor(cfg.k_ratio * static_cast<double>(x.cols()))));
  const Matrix& cas = st.s_supp();
  return localize_cas(cas, video_scores(cas, k), cfg, duration_sec, video_id);
}

inline nlohmann::json predictions_to_json(const std::vector<DetectedInstance>& preds) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : preds)
    arr.push_back({{"video_id", p.video_id},
                   {"t_start", p.t_start},
                   {"t_end", p.t_end},
                   {"class", p.class_id},
                   {"score", p.score}});
  return arr;
}

inline std::vector<DetectedInstance> predictions_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error("predictions must be a JSON array");
  std::vector<DetectedInstance> out;
  for (const auto& e : j) {
    DetectedInstance d;
    d.video_id = e.at("video_id").get<std::string>();
    d.t_start = e.at("t_start").get<double>();
    d.t_end = e.at("t_end").get<double>();
    d.class_id = e.at("class").get<int>();
    d.score = e.at("score").get<double>();
    if (!(d.t_start < d.t_end)) throw Error("prediction with t_start >= t_end");
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace clicktal
