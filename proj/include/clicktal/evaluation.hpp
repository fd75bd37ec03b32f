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

// Temporal detection metrics: tIoU, per-class average precision and mAP
// over tIoU thresholds.

#include "clicktal/common.hpp"
#include "clicktal/data_model.hpp"
#include "clicktal/inference.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace clicktal {

struct GroundTruthInstance {
  std::string video_id;
  double t_start = 0.0;
  double t_end = 0.0;
  int class_id = 1;
};

inline double tiou(double a_start, double a_end, double b_start, double b_end) {
  const double inter = std::max(0.0, std::min(a_end, b_end) - std::max(a_start, b_start));
  const double uni = (a_end - a_start) + (b_end - b_start) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

struct ApResult {
  double ap = 0.0;
  bool undefined = false;  // no ground truth and no predictions
  int num_gt = 0;
  int num_pred = 0;
  std::vector<bool> true_positive;  // in ranked order
};

/// Average precision of one class: predictions ranked by descending score
/// (stable on input order), each matched greedily to the unmatched ground
/// truth in the same video with the highest tIoU >= `threshold`. AP is the
/// exact area under the precision/recall staircase.
inline ApResult average_precision(const std::vector<DetectedInstance>& preds,
                                  const std::vector<GroundTruthInstance>& gts, double threshold) {
  ApResult r;
  r.num_gt = static_cast<int>(gts.size());
  r.num_pred = static_cast<int>(preds.size());
  if (gts.empty()) {
    r.undefined = preds.empty();
    return r;
  }
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });

  std::vector<bool> matched(gts.size(), false);
  int tp = 0;
  double ap = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& p = preds[order[rank]];
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (matched[g] || gts[g].video_id != p.video_id) continue;
      const double iou = tiou(p.t_start, p.t_end, gts[g].t_start, gts[g].t_end);
      if (iou >= threshold && iou > best_iou) {
        best = static_cast<int>(g);
        best_iou = iou;
      }
    }
    const bool hit = best >= 0;
    r.true_positive.push_back(hit);
    if (hit) {
      matched[static_cast<std::size_t>(best)] = true;
      ++tp;
      ap += static_cast<double>(tp) / static_cast<double>(rank + 1);
    }
  }
  r.ap = ap / static_cast<double>(gts.size());
  return r;
}

struct MapTable {
  std::vector<double> thresholds;
  std::vector<int> classes;               // classes with at least one GT
  std::vector<std::vector<double>> ap;    // [threshold][class]
  std::vector<double> map;                // per threshold
  double average_map = 0.0;
};

/// mAP at every threshold over classes 1..num_classes that have ground truth;
/// classes with ground truth but no predictions contribute AP 0.
inline MapTable map_at(const std::vector<DetectedInstance>& preds, const std::vector<GroundTruthInstance>& gts,
                       const std::vector<double>& thresholds, int num_classes) {
  require(!thresholds.empty(), "map_at: need at least one threshold");
  MapTable table;
  table.thresholds = thresholds;
  std::map<int, std::vector<DetectedInstance>> pred_by_class;
  std::map<int, std::vector<GroundTruthInstance>> gt_by_class;
  for (const auto& p : preds) pred_by_class[p.class_id].push_back(p);
  for (const auto& g : gts) gt_by_class[g.class_id].push_back(g);
  for (int c = 1; c <= num_classes; ++c)
    if (gt_by_class.count(c) != 0) table.classes.push_back(c);
  for (double thr : thresholds) {
    std::vector<double> row;
    double sum = 0.0;
    for (int c : table.classes) {
      const double ap = average_precision(pred_by_class[c], gt_by_class[c], thr).ap;
      row.push_back(ap);
      sum += ap;
    }
    table.map.push_back(table.classes.empty() ? 0.0 : sum / static_cast<double>(table.classes.size()));
    table.ap.push_back(std::move(row));
  }
  double total = 0.0;
  for (double m : table.map) total += m;
  table.average_map = total / static_cast<double>(table.map.size());
  return table;
}

inline double map_value(const MapTable& t, double threshold) {
  for (std::size_t i = 0; i < t.thresholds.size(); ++i)
    if (std::abs(t.thresholds[i] - threshold) < 1e-9) return t.map[i];
  throw InvalidArgument("map_value: threshold not in table");
}

inline std::vector<GroundTruthInstance> ground_truth_from(const std::vector<VideoSample>& videos) {
  std::vector<GroundTruthInstance> out;
  for (const auto& v : videos)
    for (const auto& s : v.annotation.segments) out.push_back({v.entry.video_id, s.start_sec, s.end_sec, s.class_id});
  return out;
}

/// Rows are thresholds; columns are per-class AP then the mean.
inline std::string map_table_csv(const MapTable& t, const std::vector<std::string>& class_names) {
  std::string out = "tiou";
  for (int c : t.classes)
    out += "," + (c - 1 < static_cast<int>(class_names.size()) ? class_names[c - 1] : "class_" + std::to_string(c));
  out += ",mAP\n";
  char buf[64];
  for (std::size_t i = 0; i < t.thresholds.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.2f", t.thresholds[i]);
    out += buf;
    for (double ap : t.ap[i]) {
      std::snprintf(buf, sizeof(buf), ",%.6f", ap);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.6f\n", t.map[i]);
    out += buf;
  }
  return out;
}

inline nlohmann::json map_table_json(const MapTable& t) {
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t i = 0; i < t.thresholds.size(); ++i) per.push_back({{"tiou", t.thresholds[i]}, {"mAP", t.map[i]}});
  return {{"classes", t.classes}, {"per_threshold", per}, {"average_mAP", t.average_map}};
}

}  // namespace clicktal
