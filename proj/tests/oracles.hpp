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
#pragma once

// Independent reference implementations used as test oracles. Kept
// deliberately naive: plain loops, no shared code with the library paths
// they check.

#include "clicktal/evaluation.hpp"
#include "clicktal/inference.hpp"
#include "clicktal/network.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace clicktal::oracle {

/// y[o][t] = b[o] + sum_i sum_d taps[i](o, d) * x(d, t - h/2 + i) * mask(i, t).
inline Matrix conv_triple_loop(const ConvLayer& layer, const Matrix& x, const Matrix* mask) {
  const int h = static_cast<int>(layer.taps.size());
  const int out_dim = static_cast<int>(layer.bias.size());
  const int T = static_cast<int>(x.cols());
  Matrix y(out_dim, T);
  for (int o = 0; o < out_dim; ++o) {
    for (int t = 0; t < T; ++t) {
      double acc = layer.bias(o);
      for (int i = 0; i < h; ++i) {
        const int src = t - h / 2 + i;
        if (src < 0 || src >= T) continue;
        const double m = mask != nullptr ? (*mask)(i, t) : 1.0;
        for (int d = 0; d < x.rows(); ++d) acc += layer.taps[i](o, d) * x(d, src) * m;
      }
      y(o, t) = acc;
    }
  }
  return y;
}

inline double cosine(const Vector& u, const Vector& v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    dot += u(i) * v(i);
    nu += u(i) * u(i);
    nv += v(i) * v(i);
  }
  return dot / std::max(std::sqrt(nu) * std::sqrt(nv), 1e-8);
}

inline Matrix affinity_double_loop(const Matrix& e, int h) {
  const int T = static_cast<int>(e.cols());
  Matrix a = Matrix::Zero(h, T);
  for (int i = 0; i < h; ++i)
    for (int t = 0; t < T; ++t) {
      const int n = t - h / 2 + i;
      if (n >= 0 && n < T) a(i, t) = cosine(e.col(t), e.col(n));
    }
  return a;
}

/// Greedy NMS characterised without running the greedy loop: the kept set K
/// is the unique subset in which every member has no higher-ranked member
/// of K at or above the threshold, and every non-member has one. Searches
/// all subsets.
inline std::vector<int> nms_all_subsets(const std::vector<Candidate>& c, double thr) {
  const int n = static_cast<int>(c.size());
  auto ranked_before = [&](int a, int b) {
    return c[a].score > c[b].score || (c[a].score == c[b].score && (c[a].start < c[b].start || (c[a].start == c[b].start && a < b)));
  };
  std::vector<std::vector<int>> valid;
  for (int mask = 0; mask < (1 << n); ++mask) {
    bool ok = true;
    for (int j = 0; j < n && ok; ++j) {
      bool covered = false;
      for (int i = 0; i < n; ++i)
        if ((mask >> i & 1) && i != j && ranked_before(i, j) && frame_tiou(c[i], c[j]) >= thr) covered = true;
      const bool in = mask >> j & 1;
      ok = in ? !covered : covered;
    }
    if (ok) {
      std::vector<int> kept;
      for (int i = 0; i < n; ++i)
        if (mask >> i & 1) kept.push_back(i);
      valid.push_back(kept);
    }
  }
  return valid.size() == 1 ? valid.front() : std::vector<int>{-1};
}

/// AP as the best precision/recall staircase area over every admissible
/// one-to-one assignment of predictions to ground truth (same video,
/// tIoU >= thr). Exponential; fixtures only.
inline double ap_exhaustive(const std::vector<DetectedInstance>& preds, const std::vector<GroundTruthInstance>& gts,
                            double thr) {
  if (gts.empty()) return 0.0;
  std::vector<int> order(preds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return preds[a].score > preds[b].score; });
  double best = 0.0;
  std::vector<int> used(gts.size(), 0);
  std::vector<int> tp(order.size(), 0);
  // Depth-first over ranks: each prediction takes one admissible free GT or none.
  auto area = [&] {
    // Each true positive raises recall by 1/|gts|; sum precisions first.
    double sum = 0.0;
    int hits = 0;
    for (std::size_t r = 0; r < tp.size(); ++r) {
      if (!tp[r]) continue;
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
    return sum / static_cast<double>(gts.size());
  };
  auto rec = [&](auto&& self, std::size_t r) -> void {
    if (r == order.size()) {
      best = std::max(best, area());
      return;
    }
    const auto& p = preds[order[r]];
    tp[r] = 0;
    self(self, r + 1);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || gts[g].video_id != p.video_id) continue;
      if (tiou(p.t_start, p.t_end, gts[g].t_start, gts[g].t_end) < thr) continue;
      used[g] = 1;
      tp[r] = 1;
      self(self, r + 1);
      tp[r] = 0;
      used[g] = 0;
    }
  };
  rec(rec, 0);
  return best;
}

inline double map_exhaustive(const std::vector<DetectedInstance>& preds, const std::vector<GroundTruthInstance>& gts,
                             double thr, int num_classes) {
  double sum = 0.0;
  int n = 0;
  for (int c = 1; c <= num_classes; ++c) {
    std::vector<DetectedInstance> pc;
    std::vector<GroundTruthInstance> gc;
    for (const auto& p : preds)
      if (p.class_id == c) pc.push_back(p);
    for (const auto& g : gts)
      if (g.class_id == c) gc.push_back(g);
    if (gc.empty()) continue;
    sum += ap_exhaustive(pc, gc, thr);
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
  return m;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("clicktal_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Entries are multiples of 1/64 in [-4, 4], so sums, means and integer
// shifts are exact in double precision.
inline Matrix dyadic_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> d(-256, 256);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(gen) / 64.0;
  return m;
}

inline std::vector<int> random_clicks(int T, int n, std::mt19937_64& gen) {
  std::vector<int> b(T, kUnknown);
  for (int placed = 0; placed < n;) {
    const int t = static_cast<int>(gen() % static_cast<unsigned>(T));
    if (b[t] == kBackground) continue;
    b[t] = kBackground;
    ++placed;
  }
  return b;
}

// Two classes over three videos, with overlapping predictions, a duplicate,
// a wrong-video hit and an unmatched ground truth.
struct MapFixture {
  std::vector<DetectedInstance> preds;
  std::vector<GroundTruthInstance> gts;
};

inline std::vector<MapFixture> map_fixtures() {
  MapFixture a;
  a.gts = {{"v1", 0, 10, 1}, {"v1", 20, 30, 1}, {"v2", 5, 15, 1}, {"v2", 30, 40, 2}, {"v3", 0, 8, 2}};
  a.preds = {{"v1", 1, 11, 1, 0.95}, {"v1", 0, 9, 1, 0.90}, {"v2", 6, 14, 1, 0.80}, {"v3", 0, 10, 1, 0.70},
             {"v1", 18, 31, 1, 0.40}, {"v2", 31, 41, 2, 0.60}, {"v3", 1, 7, 2, 0.85}, {"v1", 30, 40, 2, 0.90}};
  MapFixture b;  // one long prediction straddling two short instances
  b.gts = {{"v1", 0, 4, 1}, {"v1", 6, 10, 1}, {"v2", 0, 10, 2}, {"v3", 2, 6, 2}};
  b.preds = {{"v1", 0, 10, 1, 0.9}, {"v1", 5.5, 10, 1, 0.8}, {"v1", 0, 5, 1, 0.3}, {"v2", 0, 4, 2, 0.99},
             {"v2", 2, 9, 2, 0.5}, {"v3", 1, 6, 2, 0.45}, {"v3", 2, 7, 2, 0.2}};
  MapFixture c;  // equal scores and class without predictions
  c.gts = {{"v1", 0, 2, 1}, {"v2", 3, 9, 1}, {"v3", 1, 2, 2}};
  c.preds = {{"v1", 0, 2, 1, 0.5}, {"v2", 0, 2, 1, 0.5}, {"v2", 3.5, 9, 1, 0.5}, {"v3", 10, 12, 1, 0.1}};
  return {a, b, c};
}

}  // namespace clicktal::oracle
