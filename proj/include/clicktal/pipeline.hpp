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

// Train -> infer -> evaluate wiring shared by the CLI and the acceptance
// suite.

#include "clicktal/evaluation.hpp"
#include "clicktal/inference.hpp"
#include "clicktal/trainer.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <thread>
#include <vector>

namespace clicktal {

inline InferenceConfig inference_config_from_json(const nlohmann::json& j, InferenceConfig base = {}) {
  if (j.contains("tau_cls")) base.tau_cls = j.at("tau_cls").get<double>();
  if (j.contains("seg_thresholds")) base.seg_thresholds = j.at("seg_thresholds").get<std::vector<double>>();
  if (j.contains("nms_tiou")) base.nms_tiou = j.at("nms_tiou").get<double>();
  if (j.contains("inflation")) base.inflation = j.at("inflation").get<double>();
  if (j.contains("k_ratio")) base.k_ratio = j.at("k_ratio").get<double>();
  base.validate();
  return base;
}

inline nlohmann::json to_json(const InferenceConfig& c) {
  return {{"tau_cls", c.tau_cls},
          {"seg_thresholds", c.seg_thresholds},
          {"nms_tiou", c.nms_tiou},
          {"inflation", c.inflation},
          {"k_ratio", c.k_ratio}};
}

/// Detections for every video; per-video work spread over `jobs` threads,
/// output concatenated in input order.
inline std::vector<DetectedInstance> run_inference(const ModelParams& params, const std::vector<VideoSample>& videos,
                                                   const ForwardOptions& fwd, const InferenceConfig& cfg,
                                                   int jobs = 1) {
  std::vector<std::vector<DetectedInstance>> per(videos.size());
  auto work = [&](std::size_t i) {
    per[i] = localize(params, videos[i].features.data, fwd, cfg, videos[i].entry.duration_sec,
                      videos[i].entry.video_id);
  };
  const std::size_t n_jobs = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), videos.size());
  if (n_jobs <= 1) {
    for (std::size_t i = 0; i < videos.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < n_jobs; ++j)
      pool.emplace_back([&, j] {
        for (std::size_t i = j; i < videos.size(); i += n_jobs) work(i);
      });
    for (auto& t : pool) t.join();
  }
  std::vector<DetectedInstance> out;
  for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
  return out;
}

inline const std::vector<double>& default_thresholds() {
  static const std::vector<double> t = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  return t;
}

struct ExperimentResult {
  TrainResult training;
  std::vector<DetectedInstance> predictions;
  MapTable table;
  double gap_at_init = 0.0;
  double gap_trained = 0.0;
};

/// Trains on `train_set`, localizes `test_set` and scores it.
inline ExperimentResult run_experiment(const TrainConfig& cfg, const std::vector<VideoSample>& train_set,
                                       const std::vector<VideoSample>& test_set, const InferenceConfig& icfg,
                                       const std::vector<double>& thresholds) {
  ExperimentResult r;
  const int C = train_set.front().annotation.num_classes();
  const NetworkShape shape = cfg.shape(C, train_set.front().features.dim());
  r.gap_at_init = mean_separation_gap(ModelParams::initialize(shape, mix_seed(cfg.seed, 1)), train_set, cfg);
  r.training = train(cfg, train_set);
  r.gap_trained = mean_separation_gap(r.training.params, train_set, cfg);
  InferenceConfig ic = icfg;
  ic.k_ratio = cfg.k_ratio;
  r.predictions = run_inference(r.training.params, test_set, cfg.forward_options(), ic, cfg.jobs);
  r.table = map_at(r.predictions, ground_truth_from(test_set), thresholds, C);
  return r;
}

inline std::vector<VideoSample> subset_of(const std::vector<VideoSample>& all, const std::string& subset) {
  std::vector<VideoSample> out;
  for (const auto& v : all)
    if (v.entry.subset == subset) out.push_back(v);
  return out;
}

}  // namespace clicktal
