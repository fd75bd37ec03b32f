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

// Click annotation simulation from ground truth, and the synthetic feature
// dataset used for desk-scale experiments.

#include "clicktal/common.hpp"
#include "clicktal/data_model.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace clicktal {

struct Interval {
  double start = 0.0;
  double end = 0.0;
  double length() const { return end - start; }
};

/// Union of the segment intervals, sorted, with touching intervals fused.
inline std::vector<Interval> merge_segments(const std::vector<GroundTruthSegment>& gt) {
  std::vector<Interval> iv;
  iv.reserve(gt.size());
  for (const auto& s : gt) iv.push_back({s.start_sec, s.end_sec});
  std::sort(iv.begin(), iv.end(), [](const Interval& a, const Interval& b) {
    return a.start < b.start || (a.start == b.start && a.end < b.end);
  });
  std::vector<Interval> merged;
  for (const auto& i : iv) {
    if (!merged.empty() && i.start <= merged.back().end)
      merged.back().end = std::max(merged.back().end, i.end);
    else
      merged.push_back(i);
  }
  return merged;
}

/// Maximal background gaps of at least `min_length` seconds, including the
/// leading and trailing gaps.
inline std::vector<Interval> background_gaps(const std::vector<GroundTruthSegment>& gt, double duration_sec,
                                             double min_length) {
  std::vector<Interval> gaps;
  double cursor = 0.0;
  for (const auto& m : merge_segments(gt)) {
    if (m.start > cursor) gaps.push_back({cursor, m.start});
    cursor = std::max(cursor, m.end);
  }
  if (duration_sec > cursor) gaps.push_back({cursor, duration_sec});
  std::erase_if(gaps, [&](const Interval& g) { return g.length() < min_length || g.length() <= 0.0; });
  return gaps;
}

struct ClickSimulation {
  VideoAnnotation annotation;
  /// Set when no background gap was long enough to click.
  bool no_background_gap = false;
};

namespace detail {

inline void check_segments(const std::vector<GroundTruthSegment>& gt, double duration_sec, int num_classes) {
  require(duration_sec > 0.0, "click simulation: duration must be positive");
  for (const auto& s : gt) {
    require(s.start_sec >= 0.0 && s.start_sec < s.end_sec, "click simulation: segment with start >= end");
    require(s.end_sec <= duration_sec, "click simulation: segment ends after the video");
    require(s.class_id >= 1 && s.class_id <= num_classes, "click simulation: class_id out of range");
  }
}

inline std::vector<int> union_labels(const std::vector<GroundTruthSegment>& gt, int num_classes) {
  std::vector<int> labels(num_classes + 1, 0);
  for (const auto& s : gt) labels[s.class_id] = 1;
  return labels;
}

// Uniform on the open interval (lo, hi).
inline double open_uniform(Rng& rng, double lo, double hi) {
  double t;
  do {
    t = rng.uniform(lo, hi);
  } while (t <= lo || t >= hi);
  return t;
}

}  // namespace detail

/// One uniformly placed click inside every background gap at least one grid
/// frame long.
inline ClickSimulation simulate_background_clicks(const std::vector<GroundTruthSegment>& gt, double duration_sec,
                                                  int num_classes, int fixed_length, std::uint64_t seed,
                                                  std::string video_id = "video") {
  detail::check_segments(gt, duration_sec, num_classes);
  require(fixed_length >= 1, "simulate_background_clicks: T_fixed must be positive");
  Rng rng(seed);
  ClickSimulation out;
  auto& a = out.annotation;
  a.video_id = std::move(video_id);
  a.duration_sec = duration_sec;
  a.labels = detail::union_labels(gt, num_classes);
  a.clicks.assign(fixed_length, kUnknown);
  a.segments = gt;
  const auto gaps = background_gaps(gt, duration_sec, duration_sec / fixed_length);
  for (const auto& g : gaps) {
    const double t = detail::open_uniform(rng, g.start, g.end);
    a.click_times_sec.push_back(t);
    a.clicks[map_time_to_frame(t, duration_sec, fixed_length)] = kBackground;
  }
  out.no_background_gap = gaps.empty();
  return out;
}

/// One uniformly placed, class-labelled click inside every action instance.
inline ClickSimulation simulate_action_clicks(const std::vector<GroundTruthSegment>& gt, double duration_sec,
                                              int num_classes, int fixed_length, std::uint64_t seed,
                                              std::string video_id = "video") {
  detail::check_segments(gt, duration_sec, num_classes);
  require(fixed_length >= 1, "simulate_action_clicks: T_fixed must be positive");
  Rng rng(seed);
  ClickSimulation out;
  auto& a = out.annotation;
  a.video_id = std::move(video_id);
  a.duration_sec = duration_sec;
  a.labels = detail::union_labels(gt, num_classes);
  a.clicks.assign(fixed_length, kUnknown);
  a.segments = gt;
  for (const auto& s : gt) {
    const double t = rng.uniform(s.start_sec, s.end_sec);
    a.action_clicks.push_back({t, map_time_to_frame(t, duration_sec, fixed_length), s.class_id});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic dataset

struct SyntheticConfig {
  int n_train = 20;
  int n_test = 10;
  int num_classes = 3;
  int dim = 16;
  int fixed_length = 128;
  double duration_sec = 64.0;
  double sigma = 0.1;
  std::uint64_t seed = 0;
  int max_segments = 4;
  int min_segment_frames = 8;
  int max_segment_frames = 24;
  int min_gap_frames = 2;
  /// Probability that a segment after the first draws a fresh class instead
  /// of repeating the video's first class.
  double mixed_class_prob = 0.2;
};

struct SyntheticDataset {
  DatasetManifest manifest;
  std::vector<VideoSample> videos;  // same order as manifest.videos
  Matrix class_means;               // dim x (C+1), column 0 is background
};

/// C+1 unit vectors with pairwise angle of at least 60 degrees. Orthonormal
/// when they fit in `dim` dimensions, rejection-sampled otherwise.
inline Matrix sample_class_means(int num_classes, int dim, Rng& rng) {
  const int n = num_classes + 1;
  Matrix means(dim, n);
  if (n <= dim) {
    Matrix g(dim, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < dim; ++i) g(i, j) = rng.normal();
    // Modified Gram-Schmidt.
    for (int j = 0; j < n; ++j) {
      Vector v = g.col(j);
      for (int p = 0; p < j; ++p) v -= means.col(p).dot(v) * means.col(p);
      means.col(j) = v.normalized();
    }
    return means;
  }
  for (int attempt = 0; attempt < 100000; ++attempt) {
    for (int j = 0; j < n; ++j) {
      Vector v(dim);
      for (int i = 0; i < dim; ++i) v(i) = rng.normal();
      means.col(j) = v.normalized();
    }
    bool ok = true;
    for (int a = 0; a < n && ok; ++a)
      for (int b = a + 1; b < n && ok; ++b) ok = means.col(a).dot(means.col(b)) <= 0.5;
    if (ok) return means;
  }
  throw InvalidArgument("sample_class_means: cannot place " + std::to_string(n) + " vectors 60 degrees apart in " +
                        std::to_string(dim) + " dimensions");
}

/// Frame-aligned, non-overlapping segments as [start, end) frame pairs.
inline std::vector<std::pair<int, int>> pack_segments(const SyntheticConfig& cfg, Rng& rng) {
  int n = rng.integer(1, cfg.max_segments);
  for (; n >= 1; --n) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      std::vector<int> lengths(n);
      for (auto& l : lengths) l = rng.integer(cfg.min_segment_frames, cfg.max_segment_frames);
      const int used = std::accumulate(lengths.begin(), lengths.end(), 0) + (n - 1) * cfg.min_gap_frames;
      const int free = cfg.fixed_length - used;
      if (free < 0) continue;
      // Distribute the free frames over the n+1 slots around the segments.
      std::vector<int> cuts(n);
      for (auto& c : cuts) c = rng.integer(0, free);
      std::sort(cuts.begin(), cuts.end());
      std::vector<std::pair<int, int>> segs;
      int cursor = 0;
      int prev_cut = 0;
      for (int i = 0; i < n; ++i) {
        cursor += cuts[i] - prev_cut;
        prev_cut = cuts[i];
        segs.emplace_back(cursor, cursor + lengths[i]);
        cursor += lengths[i] + cfg.min_gap_frames;
      }
      return segs;
    }
  }
  throw InvalidArgument("pack_segments: no feasible segment layout for T=" + std::to_string(cfg.fixed_length));
}

inline SyntheticDataset generate_synthetic_dataset(const SyntheticConfig& cfg) {
  require(cfg.num_classes >= 2, "generate_synthetic_dataset: need C >= 2");
  require(cfg.dim >= 4, "generate_synthetic_dataset: need D_in >= 4");
  require(cfg.fixed_length >= 2 && cfg.duration_sec > 0.0, "generate_synthetic_dataset: bad T or duration");
  require(cfg.sigma >= 0.0, "generate_synthetic_dataset: sigma must be non-negative");
  require(cfg.min_segment_frames >= 1 && cfg.min_segment_frames <= cfg.max_segment_frames,
          "generate_synthetic_dataset: bad segment length range");

  SyntheticDataset ds;
  Rng mean_rng(mix_seed(cfg.seed, 0));
  ds.class_means = sample_class_means(cfg.num_classes, cfg.dim, mean_rng);
  ds.manifest.T_fixed = cfg.fixed_length;
  for (int c = 1; c <= cfg.num_classes; ++c) ds.manifest.class_names.push_back("class_" + std::to_string(c));

  const int total = cfg.n_train + cfg.n_test;
  const double frame_sec = cfg.duration_sec / cfg.fixed_length;
  for (int v = 0; v < total; ++v) {
    const bool train = v < cfg.n_train;
    std::ostringstream id;
    id << (train ? "train_" : "test_") << std::setw(4) << std::setfill('0') << (train ? v : v - cfg.n_train);

    Rng rng(mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(v)));
    const auto frames = pack_segments(cfg, rng);
    std::vector<GroundTruthSegment> gt;
    std::vector<int> frame_class(cfg.fixed_length, 0);
    const int primary = rng.integer(1, cfg.num_classes);
    for (const auto& [s, e] : frames) {
      const bool fresh = !gt.empty() && rng.uniform() < cfg.mixed_class_prob;
      const int c = fresh ? rng.integer(1, cfg.num_classes) : primary;
      gt.push_back({s * frame_sec, e * frame_sec, c});
      for (int t = s; t < e; ++t) frame_class[t] = c;
    }

    VideoSample sample;
    sample.entry = {id.str(), "features/" + id.str() + ".bin", "annotations/" + id.str() + ".json", cfg.duration_sec,
                    train ? "train" : "test"};
    sample.features.video_id = id.str();
    sample.features.data.resize(cfg.dim, cfg.fixed_length);
    sample.features.fps_of_snippets = cfg.fixed_length / cfg.duration_sec;
    for (int t = 0; t < cfg.fixed_length; ++t)
      for (int d = 0; d < cfg.dim; ++d)
        sample.features.data(d, t) = ds.class_means(d, frame_class[t]) + (cfg.sigma > 0.0 ? cfg.sigma * rng.normal() : 0.0);
    // Stored on disk as f32; keep the in-memory copy identical to a reload.
    sample.features.data = sample.features.data.cast<float>().cast<double>();

    sample.annotation = simulate_background_clicks(gt, cfg.duration_sec, cfg.num_classes, cfg.fixed_length,
                                                   mix_seed(cfg.seed, 500000 + static_cast<std::uint64_t>(v)),
                                                   id.str())
                            .annotation;
    ds.manifest.videos.push_back(sample.entry);
    ds.videos.push_back(std::move(sample));
  }
  return ds;
}

inline void write_annotation(const std::filesystem::path& path, const VideoAnnotation& a) {
  io::write_text_atomic(path, to_json(a).dump(2) + "\n");
}

inline void write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticDataset& ds) {
  std::filesystem::create_directories(dir);
  for (const auto& v : ds.videos) {
    write_feature_file(dir / v.entry.feature_path, v.features);
    write_annotation(dir / v.entry.annotation_path, v.annotation);
  }
  io::write_text_atomic(dir / "manifest.json", to_json(ds.manifest).dump(2) + "\n");
}

}  // namespace clicktal
