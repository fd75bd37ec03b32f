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

// clicktal: synthetic data, click simulation, training, inference,
// evaluation, gradient checking and ablation sweeps.

#include "clicktal/click_sim.hpp"
#include "clicktal/pipeline.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace clicktal::cli {
namespace {

constexpr const char* kToolVersion = "1.0.0";

/// Output directory assembled under "<out>.partial" and renamed into place
/// on commit; an uncommitted stage is removed.
class StagedDir {
 public:
  StagedDir(fs::path out, bool overwrite) : out_(std::move(out)), stage_(out_) {
    stage_ += ".partial";
    if (fs::exists(out_) && !overwrite)
      throw Error("output directory " + out_.string() + " already exists (use --overwrite)");
    fs::remove_all(stage_);
    fs::create_directories(stage_);
  }
  ~StagedDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(stage_, ec);
    }
  }
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;

  fs::path operator/(const fs::path& rel) const { return stage_ / rel; }

  void commit() {
    fs::remove_all(out_);
    if (out_.has_parent_path()) fs::create_directories(out_.parent_path());
    fs::rename(stage_, out_);
    committed_ = true;
  }

 private:
  fs::path out_;
  fs::path stage_;
  bool committed_ = false;
};

json run_meta(const std::string& command, const std::vector<std::string>& argv, std::uint64_t seed, json config) {
  return {{"tool", "clicktal"},
          {"version", kToolVersion},
          {"command", command},
          {"argv", argv},
          {"seed", seed},
          {"config", std::move(config)}};
}

void write_json(const fs::path& path, const json& j) { io::write_text_atomic(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(io::read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(path.string() + " is not valid JSON: " + e.what());
  }
}

std::vector<VideoSample> load_subset(const fs::path& manifest, const std::string& subset) {
  auto videos = load_dataset(manifest, subset);
  if (videos.empty())
    throw Error("manifest " + manifest.string() + " has no videos" +
                (subset.empty() ? std::string() : " in subset '" + subset + "'"));
  return videos;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  fs::path out;
  SyntheticConfig cfg;
  bool overwrite = false;
};

json to_json(const SyntheticConfig& c) {
  return {{"n_train", c.n_train},
          {"n_test", c.n_test},
          {"num_classes", c.num_classes},
          {"dim", c.dim},
          {"fixed_length", c.fixed_length},
          {"duration_sec", c.duration_sec},
          {"sigma", c.sigma},
          {"max_segments", c.max_segments},
          {"min_segment_frames", c.min_segment_frames},
          {"max_segment_frames", c.max_segment_frames},
          {"min_gap_frames", c.min_gap_frames},
          {"mixed_class_prob", c.mixed_class_prob}};
}

int run_synth(const SynthArgs& a, const std::vector<std::string>& argv) {
  const auto ds = generate_synthetic_dataset(a.cfg);
  StagedDir out(a.out, a.overwrite);
  write_synthetic_dataset(out / "", ds);
  json means = json::array();
  for (Eigen::Index c = 0; c < ds.class_means.cols(); ++c)
    means.push_back(std::vector<double>(ds.class_means.col(c).data(), ds.class_means.col(c).data() + ds.class_means.rows()));
  write_json(out / "class_means.json", means);
  write_json(out / "run_meta.json", run_meta("synth", argv, a.cfg.seed, to_json(a.cfg)));
  out.commit();
  std::printf("wrote %zu videos (%d train, %d test) to %s\n", ds.videos.size(), a.cfg.n_train, a.cfg.n_test,
              a.out.string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  fs::path manifest;
  fs::path out;
  std::string mode = "background";
  std::uint64_t seed = 0;
  bool overwrite = false;
};

int run_simulate(const SimulateArgs& a, const std::vector<std::string>& argv) {
  const DatasetManifest m = load_manifest(a.manifest);
  const fs::path root = fs::absolute(a.manifest).parent_path();
  StagedDir out(a.out, a.overwrite);
  DatasetManifest sim = m;
  int without_gap = 0;
  for (std::size_t i = 0; i < m.videos.size(); ++i) {
    const auto& v = m.videos[i];
    const VideoAnnotation src = load_annotation(root / v.annotation_path);
    const std::uint64_t seed = mix_seed(a.seed, i);
    ClickSimulation s = a.mode == "background"
                            ? simulate_background_clicks(src.segments, v.duration_sec, m.num_classes(), m.T_fixed,
                                                         seed, v.video_id)
                            : simulate_action_clicks(src.segments, v.duration_sec, m.num_classes(), m.T_fixed, seed,
                                                     v.video_id);
    if (s.annotation.gt_classes().empty()) s.annotation.labels = src.labels;
    validate_annotation(s.annotation, m.num_classes(), m.T_fixed);
    if (a.mode == "background" && s.no_background_gap) {
      ++without_gap;
      std::fprintf(stderr, "warning: %s has no background gap; no clicks simulated\n", v.video_id.c_str());
    }
    const std::string rel = "annotations/" + v.video_id + ".json";
    write_annotation(out / rel, s.annotation);
    sim.videos[i].annotation_path = rel;
    sim.videos[i].feature_path = (root / v.feature_path).lexically_normal().string();
  }
  write_json(out / "manifest.json", to_json(sim));
  write_json(out / "run_meta.json",
             run_meta("simulate", argv, a.seed,
                      {{"mode", a.mode}, {"manifest", fs::absolute(a.manifest).string()},
                       {"videos_without_background_gap", without_gap}}));
  out.commit();
  std::printf("simulated %s clicks for %zu videos into %s\n", a.mode.c_str(), m.videos.size(),
              a.out.string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  fs::path config;
  fs::path manifest;
  fs::path out;
  std::string subset = "train";
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool overwrite = false;
};

TrainConfig load_train_config(const fs::path& path) { return config_from_json(read_json(path)); }

int run_train(const TrainArgs& a, const std::vector<std::string>& argv) {
  TrainConfig cfg = load_train_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.jobs) cfg.jobs = *a.jobs;
  const auto data = load_subset(a.manifest, a.subset);
  if (cfg.T_fixed != data.front().features.length()) {
    std::fprintf(stderr, "note: T_fixed %d from config replaced by manifest T_fixed %d\n", cfg.T_fixed,
                 data.front().features.length());
    cfg.T_fixed = data.front().features.length();
  }
  StagedDir out(a.out, a.overwrite);
  TrainResult r;
  try {
    r = train(cfg, data, [](const TrainLogRow& row, const ModelParams&) {
      if (row.iter == 1 || row.iter % 50 == 0)
        std::fprintf(stderr, "iter %d total %.6f (cls %.4f frame %.4f sep %.4f aff %.4f)\n", row.iter, row.total,
                     row.l_cls, row.l_frame, row.l_sep, row.l_aff);
    });
  } catch (const NonFiniteLossError& e) {
    const fs::path dump = a.out;
    fs::path diag = dump;
    diag += ".nonfinite.json";
    write_json(diag, e.diagnostic());
    throw Error(std::string(e.what()) + "; batch diagnostic written to " + diag.string());
  }
  save_checkpoint(out / "checkpoint.bin", r.params, cfg.T_fixed);
  io::write_text_atomic(out / "train_log.csv", training_log_csv(r.log));
  write_json(out / "config.json", to_json(cfg));
  write_json(out / "run_meta.json",
             run_meta("train", argv, cfg.seed,
                      {{"train", to_json(cfg)},
                       {"manifest", fs::absolute(a.manifest).string()},
                       {"subset", a.subset},
                       {"iterations", r.iterations}}));
  out.commit();
  std::printf("trained %d iterations; final total loss %.6f; checkpoint in %s\n", r.iterations,
              r.log.empty() ? 0.0 : r.log.back().total, a.out.string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct InferArgs {
  fs::path checkpoint;
  fs::path manifest;
  fs::path out;
  std::optional<fs::path> train_config;
  std::optional<fs::path> inference_config;
  std::string subset = "test";
  int jobs = 1;
  bool overwrite = false;
};

int run_infer(const InferArgs& a, const std::vector<std::string>& argv) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  // Module toggles come from the training config saved beside the checkpoint.
  TrainConfig tcfg;
  fs::path tpath = a.train_config.value_or(a.checkpoint.parent_path() / "config.json");
  const bool have_tcfg = fs::exists(tpath);
  if (have_tcfg)
    tcfg = load_train_config(tpath);
  else if (a.train_config)
    throw Error("training config " + tpath.string() + " not found");
  InferenceConfig icfg;
  icfg.k_ratio = tcfg.k_ratio;
  if (a.inference_config) icfg = inference_config_from_json(read_json(*a.inference_config), icfg);
  icfg.validate();

  const auto videos = load_subset(a.manifest, a.subset);
  for (const auto& v : videos) {
    if (v.features.dim() != ck.params.shape.input_dim)
      throw Error("video " + v.entry.video_id + " has feature dimension " + std::to_string(v.features.dim()) +
                  ", checkpoint expects " + std::to_string(ck.params.shape.input_dim));
    if (v.annotation.num_classes() != ck.params.shape.num_classes)
      throw Error("manifest class count does not match the checkpoint");
  }
  const auto preds = run_inference(ck.params, videos, tcfg.forward_options(), icfg, a.jobs);
  StagedDir out(a.out, a.overwrite);
  write_json(out / "predictions.json", predictions_to_json(preds));
  write_json(out / "run_meta.json",
             run_meta("infer", argv, tcfg.seed,
                      {{"inference", to_json(icfg)},
                       {"checkpoint", fs::absolute(a.checkpoint).string()},
                       {"train_config", have_tcfg ? json(fs::absolute(tpath).string()) : json(nullptr)},
                       {"manifest", fs::absolute(a.manifest).string()},
                       {"subset", a.subset},
                       {"jobs", a.jobs}}));
  out.commit();
  std::printf("%zu detections for %zu videos written to %s\n", preds.size(), videos.size(), a.out.string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  fs::path preds;
  fs::path manifest;
  fs::path out;
  std::vector<double> thresholds = default_thresholds();
  std::string subset = "test";
  int jobs = 1;
  bool overwrite = false;
};

int run_eval(const EvalArgs& a, const std::vector<std::string>& argv) {
  const DatasetManifest m = load_manifest(a.manifest);
  const fs::path root = a.manifest.parent_path();
  std::vector<const VideoEntry*> entries;
  for (const auto& v : m.videos)
    if (a.subset.empty() || v.subset == a.subset) entries.push_back(&v);
  if (entries.empty()) throw Error("no videos in subset '" + a.subset + "'");
  // Annotation loading is the only per-video work here.
  std::vector<VideoAnnotation> anns(entries.size());
  const std::size_t jobs = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, a.jobs)), entries.size());
  std::vector<std::thread> pool;
  std::vector<std::string> errors(jobs);
  for (std::size_t j = 0; j < jobs; ++j)
    pool.emplace_back([&, j] {
      try {
        for (std::size_t i = j; i < entries.size(); i += jobs) anns[i] = load_annotation(root / entries[i]->annotation_path);
      } catch (const std::exception& e) {
        errors[j] = e.what();
      }
    });
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (!e.empty()) throw Error(e);

  std::vector<GroundTruthInstance> gts;
  std::map<std::string, bool> known;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    known[entries[i]->video_id] = true;
    for (const auto& s : anns[i].segments) gts.push_back({entries[i]->video_id, s.start_sec, s.end_sec, s.class_id});
  }
  std::vector<DetectedInstance> preds;
  int foreign = 0;
  for (auto& p : predictions_from_json(read_json(a.preds))) {
    if (!known.count(p.video_id)) {
      ++foreign;
      continue;
    }
    if (p.class_id < 1 || p.class_id > m.num_classes())
      throw Error("prediction for " + p.video_id + " has class " + std::to_string(p.class_id) + " outside 1.." +
                  std::to_string(m.num_classes()));
    preds.push_back(std::move(p));
  }
  if (foreign > 0) std::fprintf(stderr, "warning: ignored %d predictions for videos outside the subset\n", foreign);

  const MapTable table = map_at(preds, gts, a.thresholds, m.num_classes());
  StagedDir out(a.out, a.overwrite);
  io::write_text_atomic(out / "map.csv", map_table_csv(table, m.class_names));
  json summary = map_table_json(table);
  summary["num_predictions"] = preds.size();
  summary["num_ground_truth"] = gts.size();
  write_json(out / "summary.json", summary);
  write_json(out / "run_meta.json",
             run_meta("eval", argv, 0,
                      {{"thresholds", a.thresholds},
                       {"predictions", fs::absolute(a.preds).string()},
                       {"manifest", fs::absolute(a.manifest).string()},
                       {"subset", a.subset},
                       {"jobs", a.jobs}}));
  out.commit();
  std::fputs(map_table_csv(table, m.class_names).c_str(), stdout);
  std::printf("average mAP %.4f\n", table.average_map);
  return 0;
}

// ---------------------------------------------------------------------------

struct GradcheckArgs {
  GradcheckConfig cfg;
  std::optional<fs::path> out;
  bool overwrite = false;
};

int run_gradcheck(const GradcheckArgs& a, const std::vector<std::string>& argv) {
  const auto t0 = std::chrono::steady_clock::now();
  const GradcheckReport r = gradcheck(a.cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::map<std::string, double> worst_by_component;
  for (const auto& e : r.entries)
    worst_by_component[e.component] = std::max(worst_by_component[e.component], e.max_rel_error);
  for (const auto& [name, err] : worst_by_component) std::printf("%-8s max rel error %.3e\n", name.c_str(), err);
  std::printf("%s: max rel error %.3e (tolerance %.1e), %d entries checked, %d skipped at kinks, %.1f s\n",
              r.pass ? "PASS" : "FAIL", r.max_rel_error, a.cfg.tolerance, r.checked, r.skipped, secs);
  if (a.out) {
    json entries = json::array();
    for (const auto& e : r.entries)
      entries.push_back({{"instance", e.instance},
                         {"component", e.component},
                         {"tensor", e.tensor},
                         {"max_rel_error", e.max_rel_error},
                         {"checked", e.checked},
                         {"skipped", e.skipped}});
    StagedDir out(*a.out, a.overwrite);
    write_json(out / "gradcheck.json", {{"pass", r.pass},
                                        {"max_rel_error", r.max_rel_error},
                                        {"checked", r.checked},
                                        {"skipped", r.skipped},
                                        {"entries", entries}});
    write_json(out / "run_meta.json", run_meta("gradcheck", argv, a.cfg.seed,
                                               {{"instances", a.cfg.instances},
                                                {"T", a.cfg.T},
                                                {"num_classes", a.cfg.num_classes},
                                                {"input_dim", a.cfg.input_dim},
                                                {"embedding_dim", a.cfg.embedding_dim},
                                                {"h", a.cfg.h},
                                                {"hidden", a.cfg.hidden},
                                                {"step", a.cfg.step},
                                                {"tolerance", a.cfg.tolerance}}));
    out.commit();
  }
  return r.pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Ablation grid
//
// {
//   "base": { ...train config... },
//   "inference": { ...inference config... },
//   "seeds": [0, 1, 2],
//   "thresholds": [0.1, 0.3, 0.5, 0.7],
//   "variants": [ {"name": "full"}, {"name": "no_sep", "config": {"modules": {"score_separation": false}}} ],
//   "sweeps": [ {"key": "lambda", "values": [0.1, 0.5, 1.0]} ]
// }
//
// Every variant and every swept value is trained once per seed on the train
// subset and scored on the test subset.

struct AblateArgs {
  fs::path grid;
  fs::path manifest;
  fs::path out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool overwrite = false;
};

struct Variant {
  std::string name;
  json overrides;
  json inference;
};

json merge_patch(json base, const json& patch) {
  base.merge_patch(patch);
  return base;
}

std::vector<Variant> expand_grid(const json& grid) {
  std::vector<Variant> out;
  if (grid.contains("variants"))
    for (const auto& v : grid.at("variants"))
      out.push_back({v.at("name").get<std::string>(), v.value("config", json::object()),
                     v.value("inference", json::object())});
  if (grid.contains("sweeps"))
    for (const auto& s : grid.at("sweeps")) {
      const std::string key = s.at("key").get<std::string>();
      const bool inference_key = s.value("target", std::string("train")) == "inference";
      for (const auto& val : s.at("values")) {
        Variant v{key + "=" + val.dump(), json::object(), json::object()};
        (inference_key ? v.inference : v.overrides)[key] = val;
        out.push_back(std::move(v));
      }
    }
  if (out.empty()) out.push_back({"base", json::object(), json::object()});
  return out;
}

int run_ablate(const AblateArgs& a, const std::vector<std::string>& argv) {
  const json grid = read_json(a.grid);
  static const std::vector<std::string> known = {"base", "inference", "seeds", "thresholds", "variants", "sweeps"};
  for (const auto& [key, _] : grid.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error("unknown ablation grid field '" + key + "'");
  const json base = grid.value("base", json::object());
  const json base_inf = grid.value("inference", json::object());
  std::vector<std::uint64_t> seeds = grid.value("seeds", std::vector<std::uint64_t>{0});
  if (a.seed) seeds = {*a.seed};
  const std::vector<double> thresholds = grid.value("thresholds", default_thresholds());
  const auto variants = expand_grid(grid);

  const auto all = load_subset(a.manifest, "");
  const auto train_set = subset_of(all, "train");
  const auto test_set = subset_of(all, "test");
  if (train_set.empty() || test_set.empty()) throw Error("ablate needs both train and test videos in the manifest");

  // Validate every variant before spending time on training.
  std::vector<std::pair<TrainConfig, InferenceConfig>> configs;
  for (const auto& v : variants) {
    TrainConfig cfg = config_from_json(merge_patch(base, v.overrides));
    cfg.T_fixed = train_set.front().features.length();
    cfg.jobs = a.jobs;
    cfg.validate();
    configs.emplace_back(cfg, inference_config_from_json(merge_patch(base_inf, v.inference)));
  }

  StagedDir out(a.out, a.overwrite);
  std::ostringstream csv;
  csv << "variant,seed";
  char buf[64];
  for (double t : thresholds) {
    std::snprintf(buf, sizeof(buf), ",mAP@%.2f", t);
    csv << buf;
  }
  csv << ",avg_mAP,gap_init,gap_trained\n";
  json summary = json::array();
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    std::vector<double> mean_map(thresholds.size(), 0.0);
    double mean_avg = 0.0;
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = configs[vi].first;
      cfg.seed = seed;
      const auto r = run_experiment(cfg, train_set, test_set, configs[vi].second, thresholds);
      csv << variants[vi].name << "," << seed;
      for (std::size_t i = 0; i < thresholds.size(); ++i) {
        std::snprintf(buf, sizeof(buf), ",%.6f", r.table.map[i]);
        csv << buf;
        mean_map[i] += r.table.map[i] / static_cast<double>(seeds.size());
      }
      std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%.6f\n", r.table.average_map, r.gap_at_init, r.gap_trained);
      csv << buf;
      mean_avg += r.table.average_map / static_cast<double>(seeds.size());
      std::fprintf(stderr, "%s seed %llu: avg mAP %.4f\n", variants[vi].name.c_str(),
                   static_cast<unsigned long long>(seed), r.table.average_map);
    }
    summary.push_back({{"variant", variants[vi].name},
                       {"config", to_json(configs[vi].first)},
                       {"inference", to_json(configs[vi].second)},
                       {"mean_mAP", mean_map},
                       {"mean_avg_mAP", mean_avg}});
  }
  io::write_text_atomic(out / "ablation.csv", csv.str());
  write_json(out / "summary.json", {{"thresholds", thresholds}, {"seeds", seeds}, {"variants", summary}});
  write_json(out / "run_meta.json", run_meta("ablate", argv, seeds.front(),
                                             {{"grid", grid}, {"manifest", fs::absolute(a.manifest).string()}}));
  out.commit();
  std::fputs(csv.str().c_str(), stdout);
  return 0;
}

}  // namespace
}  // namespace clicktal::cli

int main(int argc, char** argv) {
  using namespace clicktal;
  using namespace clicktal::cli;
  const std::vector<std::string> args(argv, argv + argc);

  CLI::App app{"clicktal: background-click supervised temporal action localization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic feature dataset with simulated background clicks");
  s->add_option("--out", synth.out, "Output dataset directory")->required();
  s->add_option("--seed", synth.cfg.seed, "Random seed")->capture_default_str();
  s->add_option("--n-train", synth.cfg.n_train, "Training videos")->capture_default_str()->check(CLI::NonNegativeNumber);
  s->add_option("--n-test", synth.cfg.n_test, "Test videos")->capture_default_str()->check(CLI::NonNegativeNumber);
  s->add_option("--classes", synth.cfg.num_classes, "Action classes C")->capture_default_str();
  s->add_option("--dim", synth.cfg.dim, "Feature dimension D_in")->capture_default_str();
  s->add_option("--length", synth.cfg.fixed_length, "Frames per video T")->capture_default_str();
  s->add_option("--duration", synth.cfg.duration_sec, "Video duration in seconds")->capture_default_str();
  s->add_option("--sigma", synth.cfg.sigma, "Feature noise standard deviation")->capture_default_str();
  s->add_option("--mixed-class-prob", synth.cfg.mixed_class_prob,
                "Chance that a later segment draws a fresh class instead of the video's first class")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  s->add_flag("--overwrite", synth.overwrite, "Replace an existing output directory");

  SimulateArgs sim;
  auto* sm = app.add_subcommand("simulate", "Simulate click annotations from ground-truth segments");
  sm->add_option("--manifest", sim.manifest, "Dataset manifest with ground-truth segments")
      ->required()
      ->check(CLI::ExistingFile);
  sm->add_option("--out", sim.out, "Output directory (annotations/ and manifest.json)")->required();
  sm->add_option("--mode", sim.mode, "background: one click per background gap; action: one per instance")
      ->capture_default_str()
      ->check(CLI::IsMember({"background", "action"}));
  sm->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  sm->add_flag("--overwrite", sim.overwrite, "Replace an existing output directory");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--config", tr.config, "Training config JSON")->required()->check(CLI::ExistingFile);
  t->add_option("--manifest", tr.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "Output directory (checkpoint.bin, train_log.csv, config.json)")->required();
  t->add_option("--subset", tr.subset, "Manifest subset to train on; empty for all videos")->capture_default_str();
  t->add_option("--seed", tr.seed, "Override the config seed");
  t->add_option("--jobs", tr.jobs, "Threads for per-video work inside a batch")->check(CLI::PositiveNumber);
  t->add_flag("--overwrite", tr.overwrite, "Replace an existing output directory");

  InferArgs inf;
  auto* in = app.add_subcommand("infer", "Localize actions with a trained checkpoint");
  in->add_option("--checkpoint", inf.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  in->add_option("--manifest", inf.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  in->add_option("--out", inf.out, "Output directory (predictions.json)")->required();
  in->add_option("--train-config", inf.train_config,
                 "Training config with the module toggles; default: config.json beside the checkpoint");
  in->add_option("--inference-config", inf.inference_config,
                 "JSON with tau_cls, seg_thresholds, nms_tiou, inflation, k_ratio");
  in->add_option("--subset", inf.subset, "Manifest subset; empty for all videos")->capture_default_str();
  in->add_option("--jobs", inf.jobs, "Videos processed in parallel")->capture_default_str()->check(CLI::PositiveNumber);
  in->add_flag("--overwrite", inf.overwrite, "Replace an existing output directory");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score predictions against ground truth");
  e->add_option("--preds", ev.preds, "predictions.json")->required()->check(CLI::ExistingFile);
  e->add_option("--manifest", ev.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  e->add_option("--out", ev.out, "Output directory (map.csv, summary.json)")->required();
  e->add_option("--thresholds", ev.thresholds, "Comma-separated tIoU thresholds")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  e->add_option("--subset", ev.subset, "Manifest subset; empty for all videos")->capture_default_str();
  e->add_option("--jobs", ev.jobs, "Videos loaded in parallel")->capture_default_str()->check(CLI::PositiveNumber);
  e->add_flag("--overwrite", ev.overwrite, "Replace an existing output directory");

  GradcheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  g->add_option("--instances", gc.cfg.instances, "Random instances")->capture_default_str();
  g->add_option("--seed", gc.cfg.seed, "Random seed")->capture_default_str();
  g->add_option("--T", gc.cfg.T, "Frames per instance")->capture_default_str();
  g->add_option("--hidden", gc.cfg.hidden, "Hidden width")->capture_default_str();
  g->add_option("--step", gc.cfg.step, "Central-difference step")->capture_default_str();
  g->add_option("--tolerance", gc.cfg.tolerance, "Maximum relative error")->capture_default_str();
  g->add_option("--out", gc.out, "Optional output directory for a JSON report");
  g->add_flag("--overwrite", gc.overwrite, "Replace an existing output directory");

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "Train and score a grid of configurations");
  a->add_option("--grid", ab.grid, "Ablation grid JSON")->required()->check(CLI::ExistingFile);
  a->add_option("--manifest", ab.manifest, "Dataset manifest with train and test subsets")
      ->required()
      ->check(CLI::ExistingFile);
  a->add_option("--out", ab.out, "Output directory (ablation.csv, summary.json)")->required();
  a->add_option("--seed", ab.seed, "Run only this seed instead of the grid's list");
  a->add_option("--jobs", ab.jobs, "Threads for per-video work")->capture_default_str()->check(CLI::PositiveNumber);
  a->add_flag("--overwrite", ab.overwrite, "Replace an existing output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    if (*s) return run_synth(synth, args);
    if (*sm) return run_simulate(sim, args);
    if (*t) return run_train(tr, args);
    if (*in) return run_infer(inf, args);
    if (*e) return run_eval(ev, args);
    if (*g) return run_gradcheck(gc, args);
    if (*a) return run_ablate(ab, args);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 1;
}
