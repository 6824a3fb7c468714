// Copyright 2026 The oodr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Exit-code contract of the command-line tool.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

int RunCli(const std::string& args) {
  const std::string cmd =
      std::string(OODR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path Scratch(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void WriteFile(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

TEST(Cli, VersionAndHelpSucceed) {
  EXPECT_EQ(RunCli("--version"), 0);
  EXPECT_EQ(RunCli("--help"), 0);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(RunCli(""), 2);
  EXPECT_EQ(RunCli("no-such-command"), 2);
  EXPECT_EQ(RunCli("collect-demos --bogus-flag"), 2);
}

TEST(Cli, BadConfigExitsTwo) {
  const fs::path dir = Scratch("cli_config");
  WriteFile(dir / "unknown.json", R"({"n_demos": 3})");
  WriteFile(dir / "broken.json", "{not json");
  WriteFile(dir / "range.json", R"({"eval": {"n_trials": 0}})");
  const std::string out = " --out " + (dir / "out").string();
  EXPECT_EQ(RunCli("suite --config " + (dir / "unknown.json").string() + out), 2);
  EXPECT_EQ(RunCli("suite --config " + (dir / "broken.json").string() + out), 2);
  EXPECT_EQ(RunCli("suite --config " + (dir / "range.json").string() + out), 2);
  EXPECT_EQ(RunCli("suite --config " + (dir / "missing.json").string() + out), 2);
  EXPECT_EQ(RunCli("eval --condition stacking" + out), 2);
}

TEST(Cli, TrainingFailureExitsThree) {
  // a missing dataset makes the training stage fail
  const fs::path dir = Scratch("cli_train");
  EXPECT_EQ(RunCli("train-encoder --out " + dir.string()), 3);
}

TEST(Cli, CollectWritesDatasets) {
  const fs::path dir = Scratch("cli_collect");
  WriteFile(dir / "c.json", R"({"n_demo_traj": 2, "n_explore_traj": 1,
                                "explore_steps": 20})");
  const std::string common =
      " --config " + (dir / "c.json").string() + " --seed 5 --out " + dir.string();
  EXPECT_EQ(RunCli("collect-demos --shifted" + common), 0);
  EXPECT_EQ(RunCli("collect-explore" + common), 0);
  EXPECT_TRUE(fs::exists(dir / "datasets" / "demos_pick_and_drop.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "datasets" / "demos_pick_and_drop_shifted.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "datasets" / "explore.jsonl"));
}

}  // namespace
