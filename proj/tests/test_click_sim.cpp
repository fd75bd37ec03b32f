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

#include "clicktal/click_sim.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

namespace clicktal {
namespace {

bool inside_any(double t, const std::vector<GroundTruthSegment>& gt) {
  for (const auto& s : gt)
    if (t >= s.start_sec && t <= s.end_sec) return true;
  return false;
}

TEST(BackgroundClicks, OneActionGivesTwoClicks) {
  const std::vector<GroundTruthSegment> gt = {{10.0, 20.0, 1}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto sim = simulate_background_clicks(gt, 30.0, 2, 60, seed, "v");
    ASSERT_EQ(sim.annotation.click_times_sec.size(), 2u);
    const double a = sim.annotation.click_times_sec[0], b = sim.annotation.click_times_sec[1];
    EXPECT_GE(a, 0.0);
    EXPECT_LT(a, 10.0);
    EXPECT_GT(b, 20.0);
    EXPECT_LE(b, 30.0);
    EXPECT_EQ(sim.annotation.num_background_clicks(), 2);
    EXPECT_EQ(sim.annotation.labels, (std::vector<int>{0, 1, 0}));
    EXPECT_FALSE(sim.no_background_gap);
  }
}

TEST(BackgroundClicks, FullyCoveredVideo) {
  const auto sim = simulate_background_clicks({{0.0, 12.0, 2}, {12.0, 30.0, 1}}, 30.0, 2, 60, 7, "v");
  EXPECT_TRUE(sim.annotation.click_times_sec.empty());
  EXPECT_EQ(sim.annotation.num_background_clicks(), 0);
  EXPECT_TRUE(sim.no_background_gap);
}

TEST(BackgroundClicks, SubFrameGapsGetNoClick) {
  // Frame length is 0.5 s; the 0.3 s gap between the actions is unclickable.
  const std::vector<GroundTruthSegment> gt = {{2.0, 5.0, 1}, {5.3, 8.0, 1}};
  EXPECT_EQ(background_gaps(gt, 10.0, 0.5).size(), 2u);
  const auto sim = simulate_background_clicks(gt, 10.0, 1, 20, 3, "v");
  EXPECT_EQ(sim.annotation.click_times_sec.size(), 2u);
}

TEST(BackgroundClicks, CountMatchesGapsAndAvoidsActions) {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const double dur = 20.0 + 80.0 * rng.uniform();
    std::vector<GroundTruthSegment> gt;
    const int n = rng.integer(0, 5);
    for (int i = 0; i < n; ++i) {
      const double s = rng.uniform(0.0, dur - 1.0);
      gt.push_back({s, std::min(dur, s + rng.uniform(0.1, 15.0)), rng.integer(1, 3)});
    }
    const int T = 128;
    const auto sim = simulate_background_clicks(gt, dur, 3, T, static_cast<std::uint64_t>(trial), "v");
    const auto gaps = background_gaps(gt, dur, dur / T);
    EXPECT_EQ(sim.annotation.click_times_sec.size(), gaps.size());
    for (double t : sim.annotation.click_times_sec) EXPECT_FALSE(inside_any(t, gt)) << "click at " << t;
    EXPECT_LE(sim.annotation.num_background_clicks(), static_cast<int>(gaps.size()));
  }
}

TEST(BackgroundClicks, Deterministic) {
  const std::vector<GroundTruthSegment> gt = {{3.0, 9.0, 1}, {20.0, 22.0, 2}};
  const auto a = simulate_background_clicks(gt, 40.0, 2, 80, 99, "v");
  const auto b = simulate_background_clicks(gt, 40.0, 2, 80, 99, "v");
  EXPECT_EQ(to_json(a.annotation).dump(), to_json(b.annotation).dump());
}

TEST(BackgroundClicks, RejectsBadSegments) {
  EXPECT_THROW(simulate_background_clicks({{5.0, 4.0, 1}}, 10.0, 2, 20, 0), InvalidArgument);
  EXPECT_THROW(simulate_background_clicks({{5.0, 11.0, 1}}, 10.0, 2, 20, 0), InvalidArgument);
  EXPECT_THROW(simulate_background_clicks({{5.0, 6.0, 3}}, 10.0, 2, 20, 0), InvalidArgument);
  EXPECT_THROW(simulate_background_clicks({}, 0.0, 2, 20, 0), InvalidArgument);
}

// Relative positions in 20 equal bins; Pearson statistic against uniform.
// The 0.99 quantile of chi-square with 19 degrees of freedom is 36.191.
TEST(BackgroundClicks, RelativePositionIsUniform) {
  const std::vector<GroundTruthSegment> gt = {{10.0, 20.0, 1}, {31.0, 40.0, 2}};
  std::vector<int> bins(20, 0);
  int n = 0;
  for (std::uint64_t seed = 0; n < 10000; ++seed) {
    const auto sim = simulate_background_clicks(gt, 50.0, 2, 100, seed, "v");
    const auto gaps = background_gaps(gt, 50.0, 0.5);
    for (std::size_t i = 0; i < gaps.size() && n < 10000; ++i, ++n) {
      const double rel = (sim.annotation.click_times_sec[i] - gaps[i].start) / gaps[i].length();
      ++bins[std::min(19, static_cast<int>(rel * 20))];
    }
  }
  double chi2 = 0.0;
  for (int b : bins) chi2 += (b - 500.0) * (b - 500.0) / 500.0;
  EXPECT_LT(chi2, 36.191);
}

TEST(ActionClicks, OnePerInstanceInsideIt) {
  const auto one = simulate_action_clicks({{10.0, 20.0, 2}}, 30.0, 2, 60, 5, "v");
  ASSERT_EQ(one.annotation.action_clicks.size(), 1u);
  EXPECT_GE(one.annotation.action_clicks[0].time_sec, 10.0);
  EXPECT_LE(one.annotation.action_clicks[0].time_sec, 20.0);
  EXPECT_EQ(one.annotation.action_clicks[0].class_id, 2);
  const std::vector<GroundTruthSegment> gt = {{1, 2, 1}, {4, 6, 2}, {8, 9, 1}, {12, 20, 2}};
  EXPECT_EQ(simulate_action_clicks(gt, 30.0, 2, 60, 5, "v").annotation.action_clicks.size(), 4u);
  EXPECT_TRUE(simulate_action_clicks({}, 30.0, 2, 60, 5, "v").annotation.action_clicks.empty());
}

SyntheticConfig small_config(double sigma) {
  SyntheticConfig c;
  c.sigma = sigma;
  return c;
}

TEST(Synthetic, SegmentsDisjointAndInRange) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto cfg = small_config(0.1);
    cfg.seed = seed;
    const auto ds = generate_synthetic_dataset(cfg);
    ASSERT_EQ(ds.videos.size(), 30u);
    for (const auto& v : ds.videos) {
      const auto& segs = v.annotation.segments;
      EXPECT_GE(segs.size(), 1u);
      EXPECT_LE(segs.size(), 4u);
      for (std::size_t i = 0; i < segs.size(); ++i) {
        EXPECT_GE(segs[i].start_sec, 0.0);
        EXPECT_LE(segs[i].end_sec, cfg.duration_sec);
        EXPECT_LT(segs[i].start_sec, segs[i].end_sec);
        for (std::size_t j = i + 1; j < segs.size(); ++j)
          EXPECT_TRUE(segs[i].end_sec <= segs[j].start_sec || segs[j].end_sec <= segs[i].start_sec);
      }
      for (double t : v.annotation.click_times_sec) EXPECT_FALSE(inside_any(t, segs));
      EXPECT_NO_THROW(validate_annotation(v.annotation, cfg.num_classes, cfg.fixed_length));
    }
  }
}

TEST(Synthetic, MeansAreUnitAndWellSeparated) {
  for (int dim : {4, 16}) {
    auto cfg = small_config(0.1);
    cfg.dim = dim;
    cfg.num_classes = dim == 4 ? 5 : 3;  // 6 means in 4 dims forces the rejection path
    const auto ds = generate_synthetic_dataset(cfg);
    const Matrix& m = ds.class_means;
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
      EXPECT_NEAR(m.col(i).norm(), 1.0, 1e-12);
      for (Eigen::Index j = i + 1; j < m.cols(); ++j) EXPECT_LE(m.col(i).dot(m.col(j)), 0.5 + 1e-12);
    }
  }
}

TEST(Synthetic, ZeroNoiseNearestMeanIsPerfect) {
  const auto ds = generate_synthetic_dataset(small_config(0.0));
  for (const auto& v : ds.videos) {
    const auto masks = action_frame_masks(v.annotation.segments, v.entry.duration_sec, 128, 3);
    for (int t = 0; t < 128; ++t) {
      int truth = 0;
      for (int c = 1; c <= 3; ++c)
        if (masks[c][t]) truth = c;
      Eigen::Index best;
      (ds.class_means.transpose() * v.features.data.col(t)).maxCoeff(&best);
      EXPECT_EQ(best, truth);
      EXPECT_NEAR((v.features.data.col(t) - ds.class_means.col(truth)).norm(), 0.0, 1e-6);
    }
  }
}

// Least-squares linear probe (features plus bias -> one-hot frame class)
// fitted on the training videos, scored on the test videos.
TEST(Synthetic, LinearProbeSeparatesFrames) {
  const auto ds = generate_synthetic_dataset(small_config(0.1));
  auto design = [&](const std::string& subset, Matrix& x, Matrix& y, std::vector<int>& truth) {
    std::vector<const VideoSample*> vids;
    for (const auto& v : ds.videos)
      if (v.entry.subset == subset) vids.push_back(&v);
    const int n = static_cast<int>(vids.size()) * 128;
    x.resize(n, 17);
    y = Matrix::Zero(n, 4);
    truth.assign(n, 0);
    int r = 0;
    for (const auto* v : vids) {
      const auto masks = action_frame_masks(v->annotation.segments, v->entry.duration_sec, 128, 3);
      for (int t = 0; t < 128; ++t, ++r) {
        x.row(r).head(16) = v->features.data.col(t).transpose();
        x(r, 16) = 1.0;
        for (int c = 1; c <= 3; ++c)
          if (masks[c][t]) truth[r] = c;
        y(r, truth[r]) = 1.0;
      }
    }
  };
  Matrix xtr, ytr, xte, yte;
  std::vector<int> ttr, tte;
  design("train", xtr, ytr, ttr);
  design("test", xte, yte, tte);
  const Matrix w = xtr.colPivHouseholderQr().solve(ytr);
  const Matrix pred = xte * w;
  int correct = 0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    Eigen::Index c;
    pred.row(r).maxCoeff(&c);
    correct += c == tte[r];
  }
  EXPECT_GE(static_cast<double>(correct) / pred.rows(), 0.99);
}

TEST(Synthetic, SameSeedSameBytes) {
  const auto a = generate_synthetic_dataset(small_config(0.1));
  const auto b = generate_synthetic_dataset(small_config(0.1));
  ASSERT_EQ(a.videos.size(), b.videos.size());
  for (std::size_t i = 0; i < a.videos.size(); ++i) {
    EXPECT_EQ(to_json(a.videos[i].annotation).dump(), to_json(b.videos[i].annotation).dump());
    EXPECT_EQ(encode_feature_file(a.videos[i].features), encode_feature_file(b.videos[i].features));
  }
  auto other = small_config(0.1);
  other.seed = 1;
  EXPECT_NE(to_json(generate_synthetic_dataset(other).videos[0].annotation).dump(),
            to_json(a.videos[0].annotation).dump());
}

TEST(Synthetic, InfeasiblePackingFallsBack) {
  auto cfg = small_config(0.1);
  cfg.fixed_length = 20;
  cfg.duration_sec = 10.0;
  cfg.min_segment_frames = 6;
  cfg.max_segment_frames = 6;
  cfg.min_gap_frames = 2;
  const auto ds = generate_synthetic_dataset(cfg);
  for (const auto& v : ds.videos) {
    EXPECT_GE(v.annotation.segments.size(), 1u);
    EXPECT_LE(v.annotation.segments.size(), 2u);
  }
  cfg.fixed_length = 4;
  EXPECT_THROW(generate_synthetic_dataset(cfg), InvalidArgument);
}

}  // namespace
}  // namespace clicktal
