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

// Training configuration, the per-video objective, AdamW, the training loop
// and the finite-difference gradient checker.

#include "clicktal/common.hpp"
#include "clicktal/data_model.hpp"
#include "clicktal/losses.hpp"
#include "clicktal/network.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

namespace clicktal {

// ---------------------------------------------------------------------------
// Configuration

struct ModuleToggles {
  bool frame_loss = true;
  bool score_separation = true;
  bool affinity = true;       // embedding head + modulated convolutions
  bool affinity_loss = true;  // L_aff on the embeddings (needs `affinity`)
  bool weight_supervision = false;
  bool suppression = true;

  friend bool operator==(const ModuleToggles&, const ModuleToggles&) = default;
};

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 5e-4;
  int batch_size = 16;
  int epochs = 100;
  int max_iterations = 0;  // 0: run all epochs
  double lambda = 1.0;
  double beta = 0.8;
  double tau_same = 0.5;
  double tau_diff = 0.1;
  double k_ratio = 1.0 / 8.0;
  int T_fixed = 128;
  int D_emb = 32;
  int h = 3;
  int hidden1 = 512;
  int hidden2 = 512;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::string click_mode = "background";  // or "action"
  int jobs = 1;
  ModuleToggles modules;

  int k() const { return static_cast<int>(std::floor(k_ratio * T_fixed)); }

  NetworkShape shape(int num_classes, int input_dim) const {
    return {num_classes, input_dim, D_emb, h, hidden1, hidden2};
  }

  ForwardOptions forward_options() const {
    ForwardOptions o;
    o.use_affinity = modules.affinity;
    o.suppression = modules.suppression;
    return o;
  }

  void validate() const {
    require(lr >= 0.0 && weight_decay >= 0.0, "TrainConfig: lr and weight_decay must be non-negative");
    require(batch_size >= 1 && epochs >= 0 && max_iterations >= 0, "TrainConfig: bad batch/epoch counts");
    require(lambda >= 0.0 && beta >= 0.0, "TrainConfig: lambda and beta must be non-negative");
    require(T_fixed >= 2, "TrainConfig: T_fixed must be >= 2");
    require(k() >= 1 && k() <= T_fixed, "TrainConfig: k = floor(k_ratio * T_fixed) must be in [1, T]");
    require(D_emb > 0 && hidden1 > 0 && hidden2 > 0, "TrainConfig: widths must be positive");
    require(h >= 1 && h % 2 == 1 && h <= T_fixed, "TrainConfig: h must be odd and <= T");
    require(click_mode == "background" || click_mode == "action", "TrainConfig: click_mode must be background|action");
    require(jobs >= 1, "TrainConfig: jobs must be >= 1");
    require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_eps > 0.0,
            "TrainConfig: bad Adam constants");
  }
};

/// Epoch counts for the three benchmark datasets; everything else default.
inline TrainConfig preset_config(const std::string& name) {
  TrainConfig c;
  if (name == "thumos14") {
    c.epochs = 100;
    c.T_fixed = 750;
  } else if (name == "activitynet12") {
    c.epochs = 25;
    c.T_fixed = 100;
  } else if (name == "hacs") {
    c.epochs = 8;
    c.T_fixed = 200;
  } else if (name != "default") {
    throw InvalidArgument("unknown preset '" + name + "'");
  }
  return c;
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"max_iterations", c.max_iterations},
          {"lambda", c.lambda},
          {"beta", c.beta},
          {"tau_same", c.tau_same},
          {"tau_diff", c.tau_diff},
          {"k_ratio", c.k_ratio},
          {"T_fixed", c.T_fixed},
          {"D_emb", c.D_emb},
          {"h", c.h},
          {"hidden1", c.hidden1},
          {"hidden2", c.hidden2},
          {"seed", c.seed},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"click_mode", c.click_mode},
          {"jobs", c.jobs},
          {"modules",
           {{"frame_loss", c.modules.frame_loss},
            {"score_separation", c.modules.score_separation},
            {"affinity", c.modules.affinity},
            {"affinity_loss", c.modules.affinity_loss},
            {"weight_supervision", c.modules.weight_supervision},
            {"suppression", c.modules.suppression}}}};
}

/// Overlays the keys present in `j` onto `base`. Unknown keys are an error so
/// that typos in config files do not pass silently.
inline TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {}) {
  if (!j.is_object()) throw SchemaError("config must be a JSON object");
  if (j.contains("preset")) base = preset_config(j.at("preset").get<std::string>());
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      try {
        j.at(key).get_to(field);
      } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("config field '") + key + "': " + e.what());
      }
    }
  };
  static const std::vector<std::string> known = {
      "preset",  "lr",      "weight_decay", "batch_size", "epochs",     "max_iterations", "lambda",
      "beta",    "tau_same", "tau_diff",    "k_ratio",    "T_fixed",    "D_emb",          "h",
      "hidden1", "hidden2", "seed",         "adam_beta1", "adam_beta2", "adam_eps",       "click_mode",
      "jobs",    "modules"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw SchemaError("unknown config field '" + key + "'");
  get("lr", base.lr);
  get("weight_decay", base.weight_decay);
  get("batch_size", base.batch_size);
  get("epochs", base.epochs);
  get("max_iterations", base.max_iterations);
  get("lambda", base.lambda);
  get("beta", base.beta);
  get("tau_same", base.tau_same);
  get("tau_diff", base.tau_diff);
  get("k_ratio", base.k_ratio);
  get("T_fixed", base.T_fixed);
  get("D_emb", base.D_emb);
  get("h", base.h);
  get("hidden1", base.hidden1);
  get("hidden2", base.hidden2);
  get("seed", base.seed);
  get("adam_beta1", base.adam_beta1);
  get("adam_beta2", base.adam_beta2);
  get("adam_eps", base.adam_eps);
  get("click_mode", base.click_mode);
  get("jobs", base.jobs);
  if (j.contains("modules")) {
    const auto& m = j.at("modules");
    static const std::vector<std::string> mods = {"frame_loss",         "score_separation", "affinity",
                                                  "affinity_loss",      "weight_supervision", "suppression"};
    for (const auto& [key, _] : m.items())
      if (std::find(mods.begin(), mods.end(), key) == mods.end())
        throw SchemaError("unknown module toggle '" + key + "'");
    auto flag = [&](const char* key, bool& field) {
      if (m.contains(key)) field = m.at(key).get<bool>();
    };
    flag("frame_loss", base.modules.frame_loss);
    flag("score_separation", base.modules.score_separation);
    flag("affinity", base.modules.affinity);
    flag("affinity_loss", base.modules.affinity_loss);
    flag("weight_supervision", base.modules.weight_supervision);
    flag("suppression", base.modules.suppression);
  }
  return base;
}

// ---------------------------------------------------------------------------
// Objective

enum class LossComponent { kCls, kFrame, kSep, kAff, kWsup, kTotal };

inline const char* component_name(LossComponent c) {
  switch (c) {
    case LossComponent::kCls: return "l_cls";
    case LossComponent::kFrame: return "l_frame";
    case LossComponent::kSep: return "l_sep";
    case LossComponent::kAff: return "l_aff";
    case LossComponent::kWsup: return "l_wsup";
    case LossComponent::kTotal: return "total";
  }
  return "?";
}

/// Everything computed for one video at the current parameters.
struct VideoObjective {
  ForwardState state;
  FrameLabelState pseudo;
  VideoClsLoss cls;
  FrameClsLoss frame;
  SeparationLoss sep;
  AffinityLoss aff;
  WeightSupervisionLoss wsup;
  LossReport report;
  bool sep_on = false;
  bool aff_on = false;
  bool wsup_on = false;
  bool frame_on = false;

  double value(LossComponent c) const {
    switch (c) {
      case LossComponent::kCls: return report.l_cls;
      case LossComponent::kFrame: return report.l_frame;
      case LossComponent::kSep: return report.l_sep;
      case LossComponent::kAff: return report.l_aff;
      case LossComponent::kWsup: return report.l_wsup;
      case LossComponent::kTotal: return report.total;
    }
    return 0.0;
  }
};

inline std::vector<FrameTarget> frame_targets(const VideoAnnotation& a, const std::string& click_mode) {
  if (click_mode == "action") {
    std::vector<FrameTarget> out;
    for (const auto& c : a.action_clicks) out.push_back({c.frame, c.class_id});
    return out;
  }
  return background_targets(a.clicks);
}

inline VideoObjective evaluate_objective(const ModelParams& p, const Matrix& x, const VideoAnnotation& a,
                                         const TrainConfig& cfg) {
  require(x.cols() == static_cast<Eigen::Index>(a.clicks.size()), "objective: feature length != click length");
  const int k = static_cast<int>(std::floor(cfg.k_ratio * static_cast<double>(x.cols())));
  require(k >= 1, "objective: k must be >= 1");
  VideoObjective o;
  o.state = forward_cas(p, x, cfg.forward_options());
  const Matrix& s_base = o.state.s_base();
  o.pseudo = select_pseudo_action_frames(s_base, a.labels, k, a.clicks);

  o.cls = video_cls_loss(s_base, cfg.modules.suppression ? &o.state.supp.out : nullptr, a.labels, k);
  o.frame_on = cfg.modules.frame_loss;
  if (o.frame_on) o.frame = frame_cls_loss(s_base, frame_targets(a, cfg.click_mode));
  o.sep_on = cfg.modules.score_separation;
  if (o.sep_on) o.sep = score_separation_loss(s_base, a.labels, a.clicks, k);
  o.aff_on = cfg.modules.affinity && cfg.modules.affinity_loss;
  if (o.aff_on) o.aff = affinity_loss(o.state.e, o.pseudo.labels, cfg.tau_same, cfg.tau_diff);
  o.wsup_on = cfg.modules.weight_supervision && cfg.modules.suppression;
  if (o.wsup_on) o.wsup = weight_supervision_loss(o.state.u, a.clicks);

  o.report = total_loss(o.cls.value, o.frame_on ? o.frame.value : 0.0, o.sep_on ? o.sep.value : 0.0,
                        o.aff_on ? o.aff.value : 0.0, cfg.lambda, cfg.beta, o.wsup_on ? o.wsup.value : 0.0);
  o.report.p_act = o.sep.p_act;
  o.report.p_bg = o.sep.p_bg;
  return o;
}

/// Upstream gradients of one component (or of the weighted total).
inline Upstream objective_upstream(const VideoObjective& o, const TrainConfig& cfg,
                                   LossComponent which = LossComponent::kTotal) {
  const bool all = which == LossComponent::kTotal;
  Upstream up;
  up.ds_base = Matrix::Zero(o.state.base.out.rows(), o.state.base.out.cols());
  if (all || which == LossComponent::kCls) {
    up.ds_base += o.cls.ds_base;
    if (o.cls.ds_supp.size() > 0) up.ds_supp = o.cls.ds_supp;
  }
  if (o.frame_on && (all || which == LossComponent::kFrame)) up.ds_base += o.frame.ds;
  if (o.sep_on && (all || which == LossComponent::kSep)) up.ds_base += (all ? cfg.lambda : 1.0) * o.sep.ds;
  if (o.aff_on && (all || which == LossComponent::kAff)) up.de = (all ? cfg.beta : 1.0) * o.aff.de;
  if (o.wsup_on && (all || which == LossComponent::kWsup)) up.d_attention_logit = o.wsup.d_logit;
  return up;
}

/// Discrete choices made by the forward pass (ReLU patterns, top-k sets,
/// pseudo labels, hard pairs). Finite differences are only meaningful where
/// these do not change.
inline std::vector<std::int64_t> objective_signature(const VideoObjective& o, int k) {
  std::vector<std::int64_t> sig;
  auto stack = [&](const StackCache& c) {
    for (const auto& pre : c.pre)
      for (Eigen::Index i = 0; i < pre.size(); ++i) sig.push_back(pre.data()[i] > 0.0);
    for (Eigen::Index r = 0; r < c.out.rows(); ++r)
      for (int t : topk_aggregate(c.out.row(r), k).indices) sig.push_back(t);
  };
  stack(o.state.base);
  if (o.state.has_suppression) stack(o.state.supp);
  sig.insert(sig.end(), o.pseudo.labels.begin(), o.pseudo.labels.end());
  for (const auto* hp : {&o.aff.background, &o.aff.action, &o.aff.cross}) {
    sig.push_back(hp->u);
    sig.push_back(hp->v);
    sig.push_back(hp->hinge > 0.0);
  }
  return sig;
}

// ---------------------------------------------------------------------------
// Optimizer

/// Adam with decoupled weight decay:
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p).
class AdamW {
 public:
  AdamW(const NetworkShape& shape, double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8)
      : lr_(lr), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps), m_(ModelParams::zeros(shape)),
        v_(ModelParams::zeros(shape)) {}

  void step(ModelParams& params, const ModelParams& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    auto p = params.tensors();
    auto g = grad.tensors();
    auto m = m_.tensors();
    auto v = v_.tensors();
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = 0; j < p[i].size(); ++j) {
        m[i][j] = b1_ * m[i][j] + (1.0 - b1_) * g[i][j];
        v[i][j] = b2_ * v[i][j] + (1.0 - b2_) * g[i][j] * g[i][j];
        const double mhat = m[i][j] / c1;
        const double vhat = v[i][j] / c2;
        p[i][j] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + wd_ * p[i][j]);
      }
    }
  }

  long steps() const { return t_; }

 private:
  double lr_, wd_, b1_, b2_, eps_;
  ModelParams m_, v_;
  long t_ = 0;
};

// ---------------------------------------------------------------------------
// Training loop

struct TrainLogRow {
  int iter = 0;
  double l_cls = 0.0;
  double l_frame = 0.0;
  double l_sep = 0.0;
  double l_aff = 0.0;
  double total = 0.0;
};

inline std::string training_log_csv(const std::vector<TrainLogRow>& rows) {
  std::string out = "iter,l_cls,l_frame,l_sep,l_aff,total\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iter, r.l_cls, r.l_frame, r.l_sep,
                  r.l_aff, r.total);
    out += buf;
  }
  return out;
}

class NonFiniteLossError : public Error {
 public:
  NonFiniteLossError(const std::string& what, nlohmann::json diagnostic)
      : Error(what), diagnostic_(std::move(diagnostic)) {}
  const nlohmann::json& diagnostic() const { return diagnostic_; }

 private:
  nlohmann::json diagnostic_;
};

struct TrainResult {
  ModelParams params;
  std::vector<TrainLogRow> log;
  int iterations = 0;
};

struct BatchResult {
  ModelParams grad;
  LossReport mean;
};

/// Mean objective and gradient over `batch`. Per-video work may run on
/// `jobs` threads; the reduction is always in batch order.
inline BatchResult batch_gradient(const ModelParams& params, const std::vector<const VideoSample*>& batch,
                                  const TrainConfig& cfg) {
  const std::size_t n = batch.size();
  std::vector<ModelParams> grads(n);
  std::vector<LossReport> reports(n);
  auto work = [&](std::size_t i) {
    const auto& v = *batch[i];
    const auto obj = evaluate_objective(params, v.features.data, v.annotation, cfg);
    reports[i] = obj.report;
    grads[i] = backward_cas(params, v.features.data, obj.state, objective_upstream(obj, cfg));
  };
  const std::size_t jobs = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j)
      pool.emplace_back([&, j] {
        for (std::size_t i = j; i < n; i += jobs) work(i);
      });
    for (auto& th : pool) th.join();
  }
  BatchResult out{ModelParams::zeros(params.shape), {}};
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.grad.axpy(inv, grads[i]);
    out.mean.l_cls += reports[i].l_cls * inv;
    out.mean.l_frame += reports[i].l_frame * inv;
    out.mean.l_sep += reports[i].l_sep * inv;
    out.mean.l_aff += reports[i].l_aff * inv;
    out.mean.l_wsup += reports[i].l_wsup * inv;
    out.mean.total += reports[i].total * inv;
  }
  if (!std::isfinite(out.mean.total)) {
    nlohmann::json diag = {{"videos", nlohmann::json::array()}};
    for (std::size_t i = 0; i < n; ++i)
      diag["videos"].push_back({{"video_id", batch[i]->entry.video_id},
                                {"l_cls", reports[i].l_cls},
                                {"l_frame", reports[i].l_frame},
                                {"l_sep", reports[i].l_sep},
                                {"l_aff", reports[i].l_aff},
                                {"total", reports[i].total}});
    throw NonFiniteLossError("non-finite training loss", diag);
  }
  return out;
}

inline void check_training_data(const std::vector<VideoSample>& data, const TrainConfig& cfg) {
  require(!data.empty(), "train: empty dataset");
  const int C = data.front().annotation.num_classes();
  const int D = data.front().features.dim();
  for (const auto& v : data) {
    require(v.features.length() == cfg.T_fixed, "train: video '" + v.entry.video_id + "' has length " +
                                                    std::to_string(v.features.length()) + ", config T_fixed is " +
                                                    std::to_string(cfg.T_fixed));
    require(v.features.dim() == D, "train: inconsistent feature dimension");
    require(v.annotation.num_classes() == C, "train: inconsistent class count");
  }
}

using IterationCallback = std::function<void(const TrainLogRow&, const ModelParams&)>;

/// Epochs of shuffled mini-batches (without replacement, shuffle seeded by
/// cfg.seed) with one AdamW step per batch.
inline TrainResult train(const TrainConfig& cfg, const std::vector<VideoSample>& data,
                         const IterationCallback& on_iteration = {}) {
  cfg.validate();
  check_training_data(data, cfg);
  const NetworkShape shape = cfg.shape(data.front().annotation.num_classes(), data.front().features.dim());
  TrainResult result{ModelParams::initialize(shape, mix_seed(cfg.seed, 1)), {}, 0};
  AdamW opt(shape, cfg.lr, cfg.weight_decay, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  Rng shuffle(mix_seed(cfg.seed, 2));

  std::vector<std::size_t> order(data.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.index(i)]);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      if (cfg.max_iterations > 0 && result.iterations >= cfg.max_iterations) return result;
      std::vector<const VideoSample*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
        batch.push_back(&data[order[i]]);
      const BatchResult br = batch_gradient(result.params, batch, cfg);
      opt.step(result.params, br.grad);
      ++result.iterations;
      TrainLogRow row{result.iterations, br.mean.l_cls, br.mean.l_frame, br.mean.l_sep, br.mean.l_aff, br.mean.total};
      result.log.push_back(row);
      if (on_iteration) on_iteration(row, result.params);
    }
  }
  return result;
}

/// Mean (p_act - p_bg) over videos and ground-truth classes at `params`.
inline double mean_separation_gap(const ModelParams& params, const std::vector<VideoSample>& data,
                                  const TrainConfig& cfg) {
  double sum = 0.0;
  int n = 0;
  for (const auto& v : data) {
    const auto st = forward_cas(params, v.features.data, cfg.forward_options());
    const auto sep = score_separation_loss(st.s_base(), v.annotation.labels, v.annotation.clicks, cfg.k());
    for (std::size_t i = 0; i < sep.p_act.size(); ++i) {
      sum += sep.p_act[i] - sep.p_bg[i];
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / n;
}

// ---------------------------------------------------------------------------
// Gradient check

/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central differences of a scalar function of a flat parameter vector.
inline Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& theta,
                                         double step) {
  Vector g(theta.size());
  Vector probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    probe(i) = theta(i) + step;
    const double fp = f(probe);
    probe(i) = theta(i) - step;
    const double fm = f(probe);
    probe(i) = theta(i);
    g(i) = (fp - fm) / (2.0 * step);
  }
  return g;
}

struct GradcheckConfig {
  int instances = 20;
  int T = 16;
  int num_classes = 3;
  int input_dim = 8;
  int embedding_dim = 4;
  int h = 3;
  int hidden = 8;
  int clicks = 3;
  double step = 1e-5;
  double tolerance = 1e-4;
  double floor = 1e-6;
  std::uint64_t seed = 0;
  /// Multiplies every analytic gradient; 1 for a real check, anything else
  /// is a negative control.
  double corrupt_scale = 1.0;
};

struct GradcheckEntry {
  int instance = 0;
  std::string component;
  std::string tensor;
  double max_rel_error = 0.0;
  int checked = 0;
  int skipped = 0;  // entries whose perturbation changed a discrete choice
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double max_rel_error = 0.0;
  int checked = 0;
  int skipped = 0;
  bool pass = false;
};

/// Training config used by the gradient checker: default coefficients, all
/// modules (including the weight-supervision variant) switched on.
inline TrainConfig gradcheck_train_config(const GradcheckConfig& g) {
  TrainConfig cfg;
  cfg.T_fixed = g.T;
  cfg.D_emb = g.embedding_dim;
  cfg.h = g.h;
  cfg.hidden1 = g.hidden;
  cfg.hidden2 = g.hidden;
  cfg.modules.weight_supervision = true;
  return cfg;
}

struct GradcheckInstance {
  ModelParams params;
  Matrix x;
  VideoAnnotation annotation;
};

inline GradcheckInstance make_gradcheck_instance(const GradcheckConfig& g, int index) {
  const TrainConfig cfg = gradcheck_train_config(g);
  GradcheckInstance inst;
  inst.params = ModelParams::initialize(cfg.shape(g.num_classes, g.input_dim), mix_seed(g.seed, 100 + index));
  Rng rng(mix_seed(g.seed, 200 + index));
  inst.x.resize(g.input_dim, g.T);
  for (Eigen::Index i = 0; i < inst.x.size(); ++i) inst.x.data()[i] = rng.normal();
  auto& a = inst.annotation;
  a.video_id = "gradcheck_" + std::to_string(index);
  a.labels.assign(g.num_classes + 1, 0);
  a.labels[rng.integer(1, g.num_classes)] = 1;
  if (rng.uniform() < 0.5) a.labels[rng.integer(1, g.num_classes)] = 1;
  a.clicks.assign(g.T, kUnknown);
  for (int placed = 0; placed < g.clicks;) {
    const auto t = rng.index(static_cast<std::size_t>(g.T));
    if (a.clicks[t] == kBackground) continue;
    a.clicks[t] = kBackground;
    ++placed;
  }
  a.duration_sec = g.T;
  return inst;
}

inline GradcheckReport gradcheck(const GradcheckConfig& g) {
  const TrainConfig cfg = gradcheck_train_config(g);
  const int k = cfg.k();
  const std::vector<LossComponent> components = {LossComponent::kCls, LossComponent::kFrame, LossComponent::kSep,
                                                 LossComponent::kAff, LossComponent::kWsup,  LossComponent::kTotal};
  GradcheckReport report;
  for (int n = 0; n < g.instances; ++n) {
    GradcheckInstance inst = make_gradcheck_instance(g, n);
    const auto base = evaluate_objective(inst.params, inst.x, inst.annotation, cfg);
    const auto base_sig = objective_signature(base, k);
    std::vector<ModelParams> analytic;
    for (auto c : components) {
      analytic.push_back(backward_cas(inst.params, inst.x, base.state, objective_upstream(base, cfg, c)));
      analytic.back().scale(g.corrupt_scale);
    }

    const auto names = inst.params.tensor_names();
    auto params = inst.params.tensors();
    std::vector<std::vector<GradcheckEntry>> entries(components.size(), std::vector<GradcheckEntry>(names.size()));
    for (std::size_t ti = 0; ti < params.size(); ++ti) {
      for (std::size_t j = 0; j < params[ti].size(); ++j) {
        const double orig = params[ti][j];
        params[ti][j] = orig + g.step;
        const auto plus = evaluate_objective(inst.params, inst.x, inst.annotation, cfg);
        params[ti][j] = orig - g.step;
        const auto minus = evaluate_objective(inst.params, inst.x, inst.annotation, cfg);
        params[ti][j] = orig;
        const bool smooth = objective_signature(plus, k) == base_sig && objective_signature(minus, k) == base_sig;
        for (std::size_t ci = 0; ci < components.size(); ++ci) {
          auto& e = entries[ci][ti];
          if (!smooth) {
            ++e.skipped;
            continue;
          }
          const double numeric = (plus.value(components[ci]) - minus.value(components[ci])) / (2.0 * g.step);
          const double a = analytic[ci].tensors()[ti][j];
          e.max_rel_error = std::max(e.max_rel_error, relative_error(a, numeric, g.floor));
          ++e.checked;
        }
      }
    }
    for (std::size_t ci = 0; ci < components.size(); ++ci)
      for (std::size_t ti = 0; ti < names.size(); ++ti) {
        auto e = entries[ci][ti];
        e.instance = n;
        e.component = component_name(components[ci]);
        e.tensor = names[ti];
        report.max_rel_error = std::max(report.max_rel_error, e.max_rel_error);
        report.checked += e.checked;
        report.skipped += e.skipped;
        report.entries.push_back(std::move(e));
      }
  }
  // Skips are rare kink crossings; a check that skipped most entries proves
  // nothing.
  report.pass = report.max_rel_error < g.tolerance && report.checked > 0 && report.skipped * 100 <= report.checked;
  return report;
}

}  // namespace clicktal
