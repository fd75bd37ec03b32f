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

#include "clicktal/data_model.hpp"
#include "clicktal/evaluation.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <sys/wait.h>

namespace clicktal {
namespace {

namespace fs = std::filesystem;

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(CLICKTAL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return io::read_text(p); }

class Cli : public ::testing::Test {
 protected:
  oracle::TempDir tmp{"cli"};
  fs::path log() const { return tmp.path() / "log.txt"; }
  std::string p(const std::string& rel) const { return (tmp.path() / rel).string(); }

  void synth(const std::string& out, int seed = 3) {
    ASSERT_EQ(run("synth --out " + p(out) + " --n-train 6 --n-test 3 --length 32 --duration 16 --dim 8 --seed " +
                      std::to_string(seed),
                  log()),
              0)
        << slurp(log());
  }
  void write_config(const std::string& rel) {
    io::write_text_atomic(tmp.path() / rel, R"({"hidden1": 16, "hidden2": 16, "D_emb": 8, "batch_size": 3,
                                                "epochs": 2, "lr": 0.001, "T_fixed": 32})");
  }
};

TEST_F(Cli, HelpDocumentsEveryCommand) {
  ASSERT_EQ(run("--help", log()), 0);
  const std::string top = slurp(log());
  for (const char* cmd : {"synth", "simulate", "train", "infer", "eval", "gradcheck", "ablate"})
    EXPECT_NE(top.find(cmd), std::string::npos) << cmd;
  ASSERT_EQ(run("infer --help", log()), 0);
  const std::string infer = slurp(log());
  for (const char* flag : {"--checkpoint", "--manifest", "--out", "--jobs", "--subset", "--inference-config"})
    EXPECT_NE(infer.find(flag), std::string::npos) << flag;
  ASSERT_EQ(run("eval --help", log()), 0);
  EXPECT_NE(slurp(log()).find("--thresholds"), std::string::npos);
}

TEST_F(Cli, BadInvocationsExitNonZero) {
  EXPECT_NE(run("", log()), 0);
  EXPECT_NE(run("frobnicate", log()), 0);
  EXPECT_NE(run("gradcheck --no-such-flag", log()), 0);
  EXPECT_NE(run("train --config " + p("missing.json") + " --manifest " + p("missing.json") + " --out " + p("o"),
                log()),
            0);
  EXPECT_NE(run("simulate --manifest " + p("nope.json") + " --out " + p("o") + " --mode background", log()), 0);
  synth("ds");
  EXPECT_NE(run("simulate --manifest " + p("ds/manifest.json") + " --out " + p("o") + " --mode sideways", log()), 0);
  EXPECT_FALSE(fs::exists(p("o")));
}

TEST_F(Cli, GradcheckPasses) {
  ASSERT_EQ(run("gradcheck --instances 2 --out " + p("gc"), log()), 0) << slurp(log());
  EXPECT_NE(slurp(log()).find("PASS"), std::string::npos);
  const auto report = nlohmann::json::parse(slurp(tmp.path() / "gc" / "gradcheck.json"));
  EXPECT_TRUE(report.at("pass").get<bool>());
  EXPECT_TRUE(fs::exists(tmp.path() / "gc" / "run_meta.json"));
}

TEST_F(Cli, EndToEndPipeline) {
  synth("ds");
  EXPECT_TRUE(fs::exists(p("ds/run_meta.json")));
  EXPECT_FALSE(fs::exists(p("ds.partial")));
  write_config("cfg.json");
  ASSERT_EQ(run("train --config " + p("cfg.json") + " --manifest " + p("ds/manifest.json") + " --out " + p("run"),
                log()),
            0)
      << slurp(log());
  for (const char* f : {"checkpoint.bin", "train_log.csv", "config.json", "run_meta.json"})
    EXPECT_TRUE(fs::exists(tmp.path() / "run" / f)) << f;
  ASSERT_EQ(run("infer --checkpoint " + p("run/checkpoint.bin") + " --manifest " + p("ds/manifest.json") +
                    " --out " + p("pred") + " --jobs 2",
                log()),
            0)
      << slurp(log());
  predictions_from_json(nlohmann::json::parse(slurp(tmp.path() / "pred" / "predictions.json")));
  ASSERT_EQ(run("eval --preds " + p("pred/predictions.json") + " --manifest " + p("ds/manifest.json") +
                    " --thresholds 0.1,0.3,0.5 --out " + p("eval"),
                log()),
            0)
      << slurp(log());
  const std::string csv = slurp(tmp.path() / "eval" / "map.csv");
  EXPECT_EQ(csv.rfind("tiou,", 0), 0u);
  EXPECT_NE(csv.find("\n0.10,"), std::string::npos);
  EXPECT_NE(csv.find("\n0.50,"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);

  // Refuses to clobber without --overwrite.
  EXPECT_NE(run("eval --preds " + p("pred/predictions.json") + " --manifest " + p("ds/manifest.json") + " --out " +
                    p("eval"),
                log()),
            0);
}

TEST_F(Cli, SameSeedSameBytes) {
  synth("a", 5);
  synth("b", 5);
  EXPECT_EQ(slurp(p("a/manifest.json")), slurp(p("b/manifest.json")));
  write_config("cfg.json");
  for (const char* out : {"r1", "r2"})
    ASSERT_EQ(run("train --config " + p("cfg.json") + " --manifest " + p("a/manifest.json") + " --out " + p(out) +
                      " --seed 9",
                  log()),
              0)
        << slurp(log());
  EXPECT_EQ(slurp(p("r1/checkpoint.bin")), slurp(p("r2/checkpoint.bin")));
  EXPECT_EQ(slurp(p("r1/train_log.csv")), slurp(p("r2/train_log.csv")));
}

TEST_F(Cli, SimulateWritesValidAnnotations) {
  synth("ds");
  for (const char* mode : {"background", "action"}) {
    const std::string out = std::string("sim_") + mode;
    ASSERT_EQ(run("simulate --manifest " + p("ds/manifest.json") + " --mode " + mode + " --seed 1 --out " + p(out),
                  log()),
              0)
        << slurp(log());
    const auto videos = load_dataset(tmp.path() / out / "manifest.json", "");
    ASSERT_EQ(videos.size(), 9u);
    std::size_t action_clicks = 0, segments = 0;
    for (const auto& v : videos) {
      const bool background = std::string(mode) == "background";
      for (int b : v.annotation.clicks) EXPECT_TRUE(b == kUnknown || (background && b == kBackground));
      action_clicks += v.annotation.action_clicks.size();
      segments += v.annotation.segments.size();
    }
    if (std::string(mode) == "action") EXPECT_EQ(action_clicks, segments);
  }
}

TEST_F(Cli, AblateWritesGrid) {
  synth("ds");
  io::write_text_atomic(tmp.path() / "grid.json", R"({
    "base": {"hidden1": 8, "hidden2": 8, "D_emb": 4, "batch_size": 3, "epochs": 1, "T_fixed": 32},
    "seeds": [0],
    "thresholds": [0.3, 0.5],
    "variants": [{"name": "full"}, {"name": "no_sep", "config": {"modules": {"score_separation": false}}}]
  })");
  ASSERT_EQ(run("ablate --grid " + p("grid.json") + " --manifest " + p("ds/manifest.json") + " --out " + p("abl"),
                log()),
            0)
      << slurp(log());
  const std::string csv = slurp(tmp.path() / "abl" / "ablation.csv");
  EXPECT_NE(csv.find("\nfull,0,"), std::string::npos);
  EXPECT_NE(csv.find("\nno_sep,0,"), std::string::npos);
}

}  // namespace
}  // namespace clicktal
