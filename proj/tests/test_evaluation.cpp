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

#include "clicktal/evaluation.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

namespace clicktal {
namespace {

using Preds = std::vector<DetectedInstance>;
using Gts = std::vector<GroundTruthInstance>;

TEST(Tiou, SpotValues) {
  EXPECT_EQ(tiou(0, 10, 5, 15), 1.0 / 3.0);
  EXPECT_EQ(tiou(2, 7, 2, 7), 1.0);
  EXPECT_EQ(tiou(0, 1, 1, 2), 0.0);
  EXPECT_EQ(tiou(0, 1, 5, 6), 0.0);
}

TEST(Ap, HandCases) {
  const Gts g = {{"v", 0, 10, 1}};
  EXPECT_EQ(average_precision({{"v", 0, 10, 1, 0.9}}, g, 0.5).ap, 1.0);
  // False positive ranked above the true positive.
  const auto r = average_precision({{"v", 20, 30, 1, 0.9}, {"v", 0, 10, 1, 0.5}}, g, 0.5);
  EXPECT_EQ(r.ap, 0.5);
  EXPECT_EQ(r.true_positive, (std::vector<bool>{false, true}));
  // Duplicate detections of one instance: the second is a false positive.
  const auto d = average_precision({{"v", 0, 10, 1, 0.9}, {"v", 0.5, 10, 1, 0.8}}, g, 0.5);
  EXPECT_EQ(d.true_positive, (std::vector<bool>{true, false}));
  EXPECT_EQ(d.ap, 1.0);
  // Right segment, wrong video.
  EXPECT_EQ(average_precision({{"w", 0, 10, 1, 0.9}}, g, 0.5).ap, 0.0);
  const auto none = average_precision({}, {}, 0.5);
  EXPECT_TRUE(none.undefined);
  EXPECT_EQ(none.ap, 0.0);
}

// The top prediction overlaps both instances equally and takes the first;
// the better-fitting second prediction then finds its instance taken.
TEST(Ap, GreedyTakesHighestTiouNotBestAssignment) {
  const Gts g = {{"v", 0, 4, 1}, {"v", 6, 10, 1}};
  const auto r = average_precision({{"v", 0, 10, 1, 0.9}, {"v", 0, 5, 1, 0.8}, {"v", 5.5, 10, 1, 0.3}}, g, 0.3);
  EXPECT_EQ(r.true_positive, (std::vector<bool>{true, false, true}));
  EXPECT_DOUBLE_EQ(r.ap, (1.0 + 2.0 / 3.0) / 2.0);
}

TEST(Map, PerfectAndEmpty) {
  const Gts g = {{"a", 0, 5, 1}, {"a", 8, 12, 2}, {"b", 1, 3, 1}};
  Preds perfect;
  for (const auto& x : g) perfect.push_back({x.video_id, x.t_start, x.t_end, x.class_id, 1.0});
  const auto t = map_at(perfect, g, {0.1, 0.5, 0.9}, 3);
  for (double m : t.map) EXPECT_EQ(m, 1.0);
  EXPECT_EQ(t.classes, (std::vector<int>{1, 2}));
  const auto e = map_at({}, g, {0.1, 0.5, 0.9}, 3);
  for (double m : e.map) EXPECT_EQ(m, 0.0);
  EXPECT_EQ(e.average_map, 0.0);
}

TEST(Map, FixturesMatchExhaustiveOracle) {
  for (const auto& f : oracle::map_fixtures()) {
    const std::vector<double> thr = {0.1, 0.3, 0.5, 0.7, 0.9};
    const auto t = map_at(f.preds, f.gts, thr, 2);
    for (std::size_t i = 0; i < thr.size(); ++i) EXPECT_EQ(t.map[i], oracle::map_exhaustive(f.preds, f.gts, thr[i], 2));
  }
}

TEST(Ap, MonotoneInThreshold) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0, 50), l(1, 10), s(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    Preds p;
    Gts g;
    for (int i = 0; i < 6; ++i) {
      const double a = u(gen);
      g.push_back({"v" + std::to_string(i % 2), a, a + l(gen), 1});
    }
    for (int i = 0; i < 10; ++i) {
      const double a = u(gen);
      p.push_back({"v" + std::to_string(i % 2), a, a + l(gen), 1, s(gen)});
    }
    double prev = 2.0;
    for (double thr = 0.05; thr <= 0.95; thr += 0.05) {
      const double ap = average_precision(p, g, thr).ap;
      EXPECT_LE(ap, prev + 1e-15);
      prev = ap;
    }
  }
}

TEST(Ap, DependsOnlyOnScoreRank) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0, 50), l(1, 10), s(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    Preds p;
    Gts g;
    for (int i = 0; i < 5; ++i) {
      const double a = u(gen);
      g.push_back({"v", a, a + l(gen), 1});
    }
    for (int i = 0; i < 8; ++i) {
      const double a = u(gen);
      p.push_back({"v", a, a + l(gen), 1, s(gen)});
    }
    Preds q = p;
    for (auto& x : q) x.score = std::exp(3.0 * x.score) - 7.0;
    EXPECT_EQ(average_precision(p, g, 0.3).ap, average_precision(q, g, 0.3).ap);
  }
}

TEST(Map, DisjointClassUnionIsClassWeighted) {
  const auto f = oracle::map_fixtures()[0];
  Preds p1, p2;
  Gts g1, g2;
  for (const auto& x : f.preds) (x.class_id == 1 ? p1 : p2).push_back(x);
  for (const auto& x : f.gts) (x.class_id == 1 ? g1 : g2).push_back(x);
  const double m1 = map_at(p1, g1, {0.5}, 2).map[0];
  const double m2 = map_at(p2, g2, {0.5}, 2).map[0];
  EXPECT_DOUBLE_EQ(map_at(f.preds, f.gts, {0.5}, 2).map[0], (m1 + m2) / 2.0);
}

TEST(Map, CsvAndJsonLayout) {
  const auto f = oracle::map_fixtures()[0];
  const auto t = map_at(f.preds, f.gts, {0.3, 0.5}, 2);
  const std::string csv = map_table_csv(t, {"jump", "run"});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "tiou,jump,run,mAP");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  const auto j = map_table_json(t);
  EXPECT_EQ(j.at("per_threshold").size(), 2u);
  EXPECT_DOUBLE_EQ(j.at("average_mAP").get<double>(), (t.map[0] + t.map[1]) / 2);
  EXPECT_THROW(map_value(t, 0.7), InvalidArgument);
}

}  // namespace
}  // namespace clicktal
