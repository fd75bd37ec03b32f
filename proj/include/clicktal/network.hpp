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

// Frame classifier with affinity-modulated temporal convolutions.
//
// The classifier is three temporal conv layers (ReLU between them) producing
// a (C+1) x T class activation sequence, row 0 being background. It runs
// twice per video: once on the raw features (base branch) and once on
// features scaled per frame by a class-agnostic attention weight
// (suppressed branch). When the affinity module is on, an embedding head
// yields unit-norm frame embeddings whose local cosine similarities form an
// h x T mask, and every classifier conv in both branches multiplies each
// neighbour's features by that mask before convolving.
//
// All gradients are derived by hand; see backward_cas.

#include "clicktal/common.hpp"
#include "clicktal/io.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clicktal {

inline constexpr double kNormEpsilon = 1e-8;

// ---------------------------------------------------------------------------
// Parameters

struct ConvLayer {
  std::vector<Matrix> taps;  // kernel width entries, each out x in
  Vector bias;               // out

  static ConvLayer zeros(int in, int out, int width) {
    ConvLayer l;
    l.taps.assign(width, Matrix::Zero(out, in));
    l.bias = Vector::Zero(out);
    return l;
  }

  int width() const { return static_cast<int>(taps.size()); }
  int in_channels() const { return taps.empty() ? 0 : static_cast<int>(taps[0].cols()); }
  int out_channels() const { return static_cast<int>(bias.size()); }
};

struct NetworkShape {
  int num_classes = 3;
  int input_dim = 16;
  int embedding_dim = 32;
  int kernel = 3;
  int hidden1 = 512;
  int hidden2 = 512;

  void validate() const {
    require(num_classes >= 1, "NetworkShape: need at least one action class");
    require(input_dim > 0 && embedding_dim > 0 && hidden1 > 0 && hidden2 > 0, "NetworkShape: widths must be positive");
    require(kernel >= 1 && kernel % 2 == 1, "NetworkShape: kernel width must be odd");
  }

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

struct ModelParams {
  NetworkShape shape;
  std::array<ConvLayer, 3> conv;
  ConvLayer attention;
  ConvLayer embedding;

  static ModelParams zeros(const NetworkShape& s) {
    s.validate();
    ModelParams p;
    p.shape = s;
    p.conv[0] = ConvLayer::zeros(s.input_dim, s.hidden1, s.kernel);
    p.conv[1] = ConvLayer::zeros(s.hidden1, s.hidden2, s.kernel);
    p.conv[2] = ConvLayer::zeros(s.hidden2, s.num_classes + 1, s.kernel);
    p.attention = ConvLayer::zeros(s.input_dim, 1, s.kernel);
    p.embedding = ConvLayer::zeros(s.input_dim, s.embedding_dim, s.kernel);
    return p;
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases,
  /// fan_in = in_channels * kernel width.
  static ModelParams initialize(const NetworkShape& s, std::uint64_t seed) {
    ModelParams p = zeros(s);
    Rng rng(seed);
    auto fill = [&](ConvLayer& l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(l.in_channels()) * l.width());
      for (auto& tap : l.taps)
        for (Eigen::Index i = 0; i < tap.size(); ++i) tap.data()[i] = rng.uniform(-bound, bound);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = rng.uniform(-bound, bound);
    };
    for (auto& l : p.conv) fill(l);
    fill(p.attention);
    fill(p.embedding);
    return p;
  }

  /// Every learnable tensor, in checkpoint order.
  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    auto layer = [&](auto& l, const std::string& name) {
      for (std::size_t i = 0; i < l.taps.size(); ++i) f(name + ".tap" + std::to_string(i), l.taps[i]);
      f(name + ".bias", l.bias);
    };
    layer(self.conv[0], "conv0");
    layer(self.conv[1], "conv1");
    layer(self.conv[2], "conv2");
    layer(self.attention, "attention");
    layer(self.embedding, "embedding");
  }

  std::vector<std::span<double>> tensors() {
    std::vector<std::span<double>> out;
    visit(*this, [&](const std::string&, auto& t) { out.emplace_back(t.data(), static_cast<std::size_t>(t.size())); });
    return out;
  }

  std::vector<std::span<const double>> tensors() const {
    std::vector<std::span<const double>> out;
    visit(*this,
          [&](const std::string&, const auto& t) { out.emplace_back(t.data(), static_cast<std::size_t>(t.size())); });
    return out;
  }

  std::vector<std::string> tensor_names() const {
    std::vector<std::string> out;
    visit(*this, [&](const std::string& n, const auto&) { out.push_back(n); });
    return out;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (auto t : tensors()) n += t.size();
    return n;
  }

  /// this += scale * other, tensor by tensor.
  void axpy(double scale, const ModelParams& other) {
    auto dst = tensors();
    auto src = other.tensors();
    for (std::size_t i = 0; i < dst.size(); ++i)
      for (std::size_t j = 0; j < dst[i].size(); ++j) dst[i][j] += scale * src[i][j];
  }

  void scale(double s) {
    for (auto t : tensors())
      for (double& v : t) v *= s;
  }

  double squared_norm() const {
    double n = 0.0;
    for (auto t : tensors())
      for (double v : t) n += v * v;
    return n;
  }

  bool bitwise_equal(const ModelParams& other) const {
    if (!(shape == other.shape)) return false;
    auto a = tensors();
    auto b = other.tensors();
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::memcmp(a[i].data(), b[i].data(), a[i].size_bytes()) != 0) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Temporal convolution

namespace detail {

// Frames t for which t + offset is inside [0, T).
struct TapRange {
  Eigen::Index first = 0;
  Eigen::Index count = 0;
};

inline TapRange tap_range(Eigen::Index length, Eigen::Index offset) {
  const Eigen::Index first = std::max<Eigen::Index>(0, -offset);
  const Eigen::Index last = std::min<Eigen::Index>(length, length - offset);
  return {first, std::max<Eigen::Index>(0, last - first)};
}

// Neighbour features for tap i, scaled by mask row i when a mask is given.
inline Matrix tap_input(const Matrix& x, const Matrix* mask, int tap, Eigen::Index offset, const TapRange& r) {
  if (mask == nullptr) return x.middleCols(r.first + offset, r.count);
  return x.middleCols(r.first + offset, r.count) * mask->row(tap).segment(r.first, r.count).asDiagonal();
}

}  // namespace detail

/// Zero-padded temporal convolution. With a mask `a` (width x T), the
/// features of the i-th neighbour of frame t are scaled by a(i, t) first:
///   y_t = bias + sum_i taps[i] * (x[:, t - width/2 + i] * a(i, t)).
inline Matrix modulated_temporal_conv(const ConvLayer& layer, const Matrix& x, const Matrix* mask) {
  const Eigen::Index T = x.cols();
  require(x.rows() == layer.in_channels(), "temporal conv: input has " + std::to_string(x.rows()) +
                                               " channels, layer expects " + std::to_string(layer.in_channels()));
  if (mask != nullptr)
    require(mask->rows() == layer.width() && mask->cols() == T, "temporal conv: mask shape must be width x T");
  const int half = layer.width() / 2;
  Matrix y = layer.bias.replicate(1, T);
  for (int i = 0; i < layer.width(); ++i) {
    const Eigen::Index offset = i - half;
    const auto r = detail::tap_range(T, offset);
    if (r.count == 0) continue;
    const Matrix in = detail::tap_input(x, mask, i, offset, r);
    y.middleCols(r.first, r.count).noalias() += layer.taps[i] * in;
  }
  return y;
}

inline Matrix modulated_temporal_conv(const ConvLayer& layer, const Matrix& x, const Matrix& mask) {
  return modulated_temporal_conv(layer, x, &mask);
}

inline Matrix temporal_conv(const ConvLayer& layer, const Matrix& x) {
  return modulated_temporal_conv(layer, x, nullptr);
}

/// Accumulates parameter gradients into `grad`, and optionally the input and
/// mask gradients into `dx` / `dmask` (which must be pre-sized).
inline void temporal_conv_backward(const ConvLayer& layer, const Matrix& x, const Matrix* mask, const Matrix& dy,
                                   ConvLayer& grad, Matrix* dx, Matrix* dmask) {
  const Eigen::Index T = x.cols();
  const int half = layer.width() / 2;
  grad.bias += dy.rowwise().sum();
  for (int i = 0; i < layer.width(); ++i) {
    const Eigen::Index offset = i - half;
    const auto r = detail::tap_range(T, offset);
    if (r.count == 0) continue;
    const auto dy_seg = dy.middleCols(r.first, r.count);
    const Matrix in = detail::tap_input(x, mask, i, offset, r);
    grad.taps[i].noalias() += dy_seg * in.transpose();
    if (dx == nullptr && dmask == nullptr) continue;
    const Matrix g = layer.taps[i].transpose() * dy_seg;  // d(loss)/d(tap input)
    if (dx != nullptr) {
      if (mask == nullptr)
        dx->middleCols(r.first + offset, r.count) += g;
      else
        dx->middleCols(r.first + offset, r.count) += g * mask->row(i).segment(r.first, r.count).asDiagonal();
    }
    if (dmask != nullptr && mask != nullptr)
      dmask->row(i).segment(r.first, r.count) +=
          g.cwiseProduct(x.middleCols(r.first + offset, r.count)).colwise().sum();
  }
}

// ---------------------------------------------------------------------------
// Embeddings and affinity

/// Cosine similarity; the denominator is floored at kNormEpsilon.
inline double cosine_affinity(std::span<const double> u, std::span<const double> v) {
  require(u.size() == v.size(), "cosine_affinity: length mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t d = 0; d < u.size(); ++d) {
    dot += u[d] * v[d];
    nu += u[d] * u[d];
    nv += v[d] * v[d];
  }
  return dot / std::max(std::sqrt(nu) * std::sqrt(nv), kNormEpsilon);
}

inline double cosine_affinity(const Matrix& e, Eigen::Index u, Eigen::Index v) {
  return cosine_affinity(std::span<const double>(e.col(u).data(), static_cast<std::size_t>(e.rows())),
                         std::span<const double>(e.col(v).data(), static_cast<std::size_t>(e.rows())));
}

/// Adds d cos(e_u, e_v) * upstream to columns u and v of `de`.
inline void cosine_affinity_backward(const Matrix& e, Eigen::Index u, Eigen::Index v, double upstream, Matrix& de) {
  const double nu = e.col(u).norm();
  const double nv = e.col(v).norm();
  const double denom = nu * nv;
  if (denom < kNormEpsilon) {
    de.col(u) += upstream * e.col(v) / kNormEpsilon;
    de.col(v) += upstream * e.col(u) / kNormEpsilon;
    return;
  }
  const double cos = e.col(u).dot(e.col(v)) / denom;
  de.col(u) += upstream * (e.col(v) / denom - cos * e.col(u) / (nu * nu));
  de.col(v) += upstream * (e.col(u) / denom - cos * e.col(v) / (nv * nv));
}

/// Column-wise L2 normalisation of z + eps. The epsilon shift gives the zero
/// vector a well-defined direction, so every output column has unit norm.
inline Matrix normalize_embeddings(const Matrix& z) {
  Matrix v = z.array() + kNormEpsilon;
  for (Eigen::Index t = 0; t < v.cols(); ++t) v.col(t) /= v.col(t).norm();
  return v;
}

inline Matrix normalize_embeddings_backward(const Matrix& z, const Matrix& e, const Matrix& de) {
  Matrix dz(z.rows(), z.cols());
  for (Eigen::Index t = 0; t < z.cols(); ++t) {
    const double norm = (z.col(t).array() + kNormEpsilon).matrix().norm();
    dz.col(t) = (de.col(t) - e.col(t) * e.col(t).dot(de.col(t))) / norm;
  }
  return dz;
}

/// Conv embedding head followed by per-frame normalisation.
inline Matrix embed_frames(const ModelParams& params, const Matrix& x) {
  return normalize_embeddings(temporal_conv(params.embedding, x));
}

/// a(i, t) = cos(e_t, e_{t - width/2 + i}); out-of-range neighbours are 0 and
/// the centre row is exactly 1.
inline Matrix local_affinity_matrix(const Matrix& e, int width) {
  require(width >= 1 && width % 2 == 1, "local_affinity_matrix: width must be odd");
  require(width <= e.cols(), "local_affinity_matrix: width exceeds sequence length");
  const Eigen::Index T = e.cols();
  const int half = width / 2;
  Matrix a = Matrix::Zero(width, T);
  for (Eigen::Index t = 0; t < T; ++t)
    for (int i = 0; i < width; ++i) {
      const Eigen::Index n = t - half + i;
      if (n < 0 || n >= T) continue;
      a(i, t) = (i == half) ? 1.0 : cosine_affinity(e, t, n);
    }
  return a;
}

inline Matrix local_affinity_backward(const Matrix& e, int width, const Matrix& da) {
  const Eigen::Index T = e.cols();
  const int half = width / 2;
  Matrix de = Matrix::Zero(e.rows(), T);
  for (Eigen::Index t = 0; t < T; ++t)
    for (int i = 0; i < width; ++i) {
      const Eigen::Index n = t - half + i;
      if (i == half || n < 0 || n >= T || da(i, t) == 0.0) continue;
      cosine_affinity_backward(e, t, n, da(i, t), de);
    }
  return de;
}

// ---------------------------------------------------------------------------
// Forward / backward

struct ForwardOptions {
  bool use_affinity = true;
  bool suppression = true;
  /// Replaces the attention head output; test hook.
  std::optional<Vector> forced_attention;
  /// Replaces the embedding-derived mask; test hook.
  std::optional<Matrix> forced_mask;
};

struct StackCache {
  std::array<Matrix, 3> inputs;  // input to each conv layer
  std::array<Matrix, 2> pre;     // pre-ReLU outputs of the first two layers
  Matrix out;                    // (C+1) x T
};

struct ForwardState {
  bool has_affinity = false;
  bool has_suppression = false;
  bool attention_forced = false;
  Matrix z;  // embedding pre-normalisation
  Matrix e;  // D_emb x T, unit columns
  Matrix a;  // kernel x T mask
  Vector u;  // attention logits
  Vector w;  // attention weights in (0, 1)
  StackCache base;
  StackCache supp;

  const Matrix& s_base() const { return base.out; }
  /// Suppressed-branch CAS, or the base CAS when suppression is off.
  const Matrix& s_supp() const { return has_suppression ? supp.out : base.out; }
  const Matrix* mask() const { return has_affinity ? &a : nullptr; }
};

namespace detail {

inline StackCache run_stack(const ModelParams& p, const Matrix& x, const Matrix* mask) {
  StackCache c;
  c.inputs[0] = x;
  c.pre[0] = modulated_temporal_conv(p.conv[0], c.inputs[0], mask);
  c.inputs[1] = c.pre[0].cwiseMax(0.0);
  c.pre[1] = modulated_temporal_conv(p.conv[1], c.inputs[1], mask);
  c.inputs[2] = c.pre[1].cwiseMax(0.0);
  c.out = modulated_temporal_conv(p.conv[2], c.inputs[2], mask);
  return c;
}

inline void stack_backward(const ModelParams& p, const StackCache& c, const Matrix* mask, const Matrix& ds,
                           ModelParams& grad, Matrix* dx, Matrix* dmask) {
  Matrix dh(c.inputs[2].rows(), c.inputs[2].cols());
  dh.setZero();
  temporal_conv_backward(p.conv[2], c.inputs[2], mask, ds, grad.conv[2], &dh, dmask);
  Matrix dp = (c.pre[1].array() > 0.0).select(dh, 0.0);
  dh.setZero(c.inputs[1].rows(), c.inputs[1].cols());
  temporal_conv_backward(p.conv[1], c.inputs[1], mask, dp, grad.conv[1], &dh, dmask);
  dp = (c.pre[0].array() > 0.0).select(dh, 0.0);
  temporal_conv_backward(p.conv[0], c.inputs[0], mask, dp, grad.conv[0], dx, dmask);
}

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace detail

inline void check_input(const ModelParams& p, const Matrix& x) {
  require(x.rows() == p.shape.input_dim, "forward: feature dimension " + std::to_string(x.rows()) +
                                             " does not match model input " + std::to_string(p.shape.input_dim));
  require(x.cols() >= 1, "forward: empty sequence");
}

/// Base and suppressed class activation sequences plus the intermediate
/// embedding, mask and attention values.
inline ForwardState forward_cas(const ModelParams& p, const Matrix& x, const ForwardOptions& opt = {}) {
  check_input(p, x);
  ForwardState st;
  st.has_affinity = opt.use_affinity;
  st.has_suppression = opt.suppression;
  if (opt.use_affinity) {
    if (opt.forced_mask) {
      st.a = *opt.forced_mask;
      require(st.a.rows() == p.shape.kernel && st.a.cols() == x.cols(), "forward: forced mask has wrong shape");
    } else {
      st.z = temporal_conv(p.embedding, x);
      st.e = normalize_embeddings(st.z);
      st.a = local_affinity_matrix(st.e, p.shape.kernel);
    }
  }
  st.base = detail::run_stack(p, x, st.mask());
  if (opt.suppression) {
    if (opt.forced_attention) {
      require(opt.forced_attention->size() == x.cols(), "forward: forced attention has wrong length");
      st.w = *opt.forced_attention;
      st.attention_forced = true;
    } else {
      st.u = temporal_conv(p.attention, x).row(0).transpose();
      st.w = st.u.unaryExpr([](double v) { return detail::sigmoid(v); });
    }
    st.supp = detail::run_stack(p, x * st.w.asDiagonal(), st.mask());
  }
  return st;
}

/// Loss gradients flowing into the network outputs. Empty matrices mean
/// "no gradient".
struct Upstream {
  Matrix ds_base;
  Matrix ds_supp;
  Matrix de;                // w.r.t. normalised embeddings
  Vector d_attention_logit; // w.r.t. attention logits u
};

inline ModelParams backward_cas(const ModelParams& p, const Matrix& x, const ForwardState& st, const Upstream& up) {
  ModelParams grad = ModelParams::zeros(p.shape);
  const Eigen::Index T = x.cols();
  const bool learn_mask = st.has_affinity && st.z.size() > 0;
  Matrix da;
  if (learn_mask) da = Matrix::Zero(p.shape.kernel, T);
  Matrix* dmask = learn_mask ? &da : nullptr;

  if (up.ds_base.size() > 0) detail::stack_backward(p, st.base, st.mask(), up.ds_base, grad, nullptr, dmask);

  if (st.has_suppression && !st.attention_forced) {
    Vector du = Vector::Zero(T);
    if (up.ds_supp.size() > 0) {
      Matrix dxw = Matrix::Zero(x.rows(), T);
      detail::stack_backward(p, st.supp, st.mask(), up.ds_supp, grad, &dxw, dmask);
      const Vector dw = dxw.cwiseProduct(x).colwise().sum().transpose();
      du = dw.cwiseProduct(st.w.cwiseProduct((1.0 - st.w.array()).matrix()));
    }
    if (up.d_attention_logit.size() > 0) du += up.d_attention_logit;
    temporal_conv_backward(p.attention, x, nullptr, du.transpose(), grad.attention, nullptr, nullptr);
  } else if (st.has_suppression && up.ds_supp.size() > 0) {
    detail::stack_backward(p, st.supp, st.mask(), up.ds_supp, grad, nullptr, dmask);
  }

  if (learn_mask) {
    Matrix de = local_affinity_backward(st.e, p.shape.kernel, da);
    if (up.de.size() > 0) de += up.de;
    const Matrix dz = normalize_embeddings_backward(st.z, st.e, de);
    temporal_conv_backward(p.embedding, x, nullptr, dz, grad.embedding, nullptr, nullptr);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Top-k aggregation and pseudo labels

struct TopK {
  double value = 0.0;
  std::vector<int> indices;  // ascending
};

/// Mean of the k largest entries; ties go to the lower index.
inline TopK topk_aggregate(const RowVector& row, int k) {
  const int T = static_cast<int>(row.size());
  require(k >= 1 && k <= T, "topk_aggregate: need 1 <= k <= T");
  std::vector<int> order(T);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
    return row(a) > row(b) || (row(a) == row(b) && a < b);
  });
  TopK out;
  out.indices.assign(order.begin(), order.begin() + k);
  std::sort(out.indices.begin(), out.indices.end());
  double sum = 0.0;
  for (int i : out.indices) sum += row(i);
  out.value = sum / k;
  return out;
}

struct FrameLabelState {
  std::vector<int> labels;                  // b-hat per frame
  std::vector<std::vector<int>> topk;       // K_c, indexed by class (empty for non-GT)
};

/// Marks the top-k frames of every ground-truth class as pseudo action (0);
/// annotated background frames keep label 1.
inline FrameLabelState select_pseudo_action_frames(const Matrix& s, const std::vector<int>& labels, int k,
                                                   const std::vector<int>& clicks) {
  require(static_cast<Eigen::Index>(labels.size()) == s.rows(), "select_pseudo_action_frames: label size mismatch");
  require(static_cast<Eigen::Index>(clicks.size()) == s.cols(), "select_pseudo_action_frames: click size mismatch");
  FrameLabelState st;
  st.labels = clicks;
  st.topk.resize(labels.size());
  for (std::size_t c = 1; c < labels.size(); ++c) {
    if (labels[c] == 0) continue;
    st.topk[c] = topk_aggregate(s.row(static_cast<Eigen::Index>(c)), k).indices;
    for (int t : st.topk[c])
      if (st.labels[t] != kBackground) st.labels[t] = kPseudoAction;
  }
  return st;
}

/// Share of the pooled top-k frames of every ground-truth class that fall on
/// action frames. `action_mask` marks action frames.
inline double topk_hit_ratio(const Matrix& s, const std::vector<int>& gt_classes, const std::vector<bool>& action_mask,
                             int k) {
  require(static_cast<Eigen::Index>(action_mask.size()) == s.cols(), "topk_hit_ratio: mask length mismatch");
  int hits = 0, total = 0;
  for (int c : gt_classes) {
    for (int t : topk_aggregate(s.row(c), k).indices) {
      hits += action_mask[t] ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / total;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// Layout (little-endian): magic "CTCK", then u32 version, C, T, D_in, D_emb,
// kernel, hidden1, hidden2, then every tensor of ModelParams::visit order as
// f64 values. Each tap is an out x in matrix stored column-major.

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
 public:
  using Error::Error;
};

struct Checkpoint {
  ModelParams params;
  int fixed_length = 0;
};

inline io::Bytes encode_checkpoint(const ModelParams& p, int fixed_length) {
  io::Bytes out = {'C', 'T', 'C', 'K'};
  const auto& s = p.shape;
  for (int v : {static_cast<int>(kCheckpointVersion), s.num_classes, fixed_length, s.input_dim, s.embedding_dim,
                s.kernel, s.hidden1, s.hidden2})
    io::put_u32(out, static_cast<std::uint32_t>(v));
  for (auto t : p.tensors())
    for (double v : t) io::put_f64(out, v);
  return out;
}

inline Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 36 || !std::equal(bytes.begin(), bytes.begin() + 4, "CTCK"))
    throw CheckpointError("not a checkpoint file");
  io::Reader r(bytes.subspan(4));
  if (r.u32() != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version");
  NetworkShape s;
  Checkpoint ck;
  s.num_classes = static_cast<int>(r.u32());
  ck.fixed_length = static_cast<int>(r.u32());
  s.input_dim = static_cast<int>(r.u32());
  s.embedding_dim = static_cast<int>(r.u32());
  s.kernel = static_cast<int>(r.u32());
  s.hidden1 = static_cast<int>(r.u32());
  s.hidden2 = static_cast<int>(r.u32());
  try {
    ck.params = ModelParams::zeros(s);
  } catch (const InvalidArgument& e) {
    throw CheckpointError(std::string("bad checkpoint header: ") + e.what());
  }
  if (r.remaining() != 8 * ck.params.size()) throw CheckpointError("checkpoint payload size mismatch");
  for (auto t : ck.params.tensors())
    for (double& v : t) v = r.f64();
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const ModelParams& p, int fixed_length) {
  io::write_file_atomic(path, encode_checkpoint(p, fixed_length));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace clicktal
