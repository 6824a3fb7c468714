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

// Command-line front end: dataset collection, per-model training, evaluation
// and the full experiment suite.
//
// Exit codes: 0 success, 2 configuration error, 3 training error, 1 other.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oodr/dataset.h"
#include "oodr/encoder.h"
#include "oodr/errors.h"
#include "oodr/experiment.h"
#include "oodr/mdn.h"
#include "oodr/policy.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTraining = 3;

struct CommonOptions {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out = "out";
};

void AddCommon(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "JSON experiment config");
  cmd->add_option("--seed", opts.seed, "master seed (overrides the config)");
  cmd->add_option("--out", opts.out, "output directory")
      ->capture_default_str();
}

oodr::ExperimentConfig ResolveConfig(const CommonOptions& opts) {
  oodr::ExperimentConfig config;
  if (!opts.config_path.empty()) config = oodr::LoadConfig(opts.config_path);
  if (opts.seed) config.seed = *opts.seed;
  oodr::ValidateConfig(config);
  return config;
}

fs::path Datasets(const CommonOptions& o) { return fs::path(o.out) / "datasets"; }
fs::path Models(const CommonOptions& o) { return fs::path(o.out) / "models"; }

std::string DemoFile(const CommonOptions& o, oodr::TaskKind task) {
  return (Datasets(o) / ("demos_" + oodr::ToString(task) + ".jsonl")).string();
}

void Report(const std::string& what, const std::string& path) {
  std::cout << what << " -> " << path << '\n';
}

oodr::TaskKind TaskOrDefault(const std::string& task,
                             const oodr::ExperimentConfig& config) {
  return task.empty() ? config.task_kind : oodr::TaskKindFromString(task);
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw oodr::FormatError("cannot write " + path.string());
  out << text;
}

void PrintTable(const oodr::ResultsTable& table) {
  std::cout << oodr::ResultsCsv(table);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Density-gated recovery for behavioral cloning policies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", oodr::ArtifactVersion());

  CommonOptions common;
  std::string task, dataset_path, encoder_path, traces_dir, plots_dir;
  bool shifted = false;
  std::vector<std::string> conditions;

  auto* explore = app.add_subcommand("collect-explore",
                                     "collect the task-agnostic exploration set");
  AddCommon(explore, common);

  auto* demos = app.add_subcommand("collect-demos",
                                   "collect scripted-expert demonstrations");
  AddCommon(demos, common);
  demos->add_option("--task", task, "pick_and_drop or push");
  demos->add_flag("--shifted", shifted,
                  "also write the one-step shifted-actions copy");

  auto* enc = app.add_subcommand("train-encoder", "train the equivariant encoder");
  AddCommon(enc, common);
  enc->add_option("--dataset", dataset_path, "exploration dataset");

  auto* mdn = app.add_subcommand("train-mdn", "train the conditional density");
  AddCommon(mdn, common);
  mdn->add_option("--task", task, "pick_and_drop or push");
  mdn->add_option("--dataset", dataset_path, "demonstration dataset");
  mdn->add_option("--encoder", encoder_path, "trained encoder");

  auto* bc = app.add_subcommand("train-bc", "train the behavioral cloning policy");
  AddCommon(bc, common);
  bc->add_option("--task", task, "pick_and_drop or push");
  bc->add_option("--dataset", dataset_path, "demonstration dataset");
  bc->add_flag("--shifted", shifted, "train on one-step shifted actions");

  auto* eval = app.add_subcommand("eval", "evaluate trained models");
  AddCommon(eval, common);
  eval->add_option("--condition", conditions,
                   "pick_and_drop, shifted_actions, perturbed or push "
                   "(repeatable; default all)");

  auto* suite = app.add_subcommand("suite", "run every experiment end to end");
  AddCommon(suite, common);

  auto* plots = app.add_subcommand("export-plots", "convert traces to CSV");
  AddCommon(plots, common);
  plots->add_option("--traces", traces_dir, "trace directory (default OUT/traces)");
  plots->add_option("--plots", plots_dir, "plot directory (default OUT/plots)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const oodr::ExperimentConfig config = ResolveConfig(common);
    const uint64_t seed = config.seed;
    using oodr::SeedStream;
    using oodr::StreamSeed;

    if (*explore) {
      fs::create_directories(Datasets(common));
      const oodr::Dataset d =
          oodr::CollectExplore(config.n_explore_traj, config.explore_steps,
                               StreamSeed(seed, SeedStream::kExplore));
      const std::string path = (Datasets(common) / "explore.jsonl").string();
      oodr::SaveDataset(d, path);
      Report(std::to_string(d.StepCount()) + " exploration steps", path);
    } else if (*demos) {
      fs::create_directories(Datasets(common));
      const oodr::TaskKind kind = TaskOrDefault(task, config);
      const bool push = kind == oodr::TaskKind::kPush;
      oodr::CollectReport report;
      const oodr::Dataset d = oodr::CollectDemos(
          push ? config.n_push_demo_traj : config.n_demo_traj, kind,
          config.noise_std,
          StreamSeed(seed, push ? SeedStream::kPushDemos
                                : SeedStream::kPickDemos),
          {}, &report);
      oodr::SaveDataset(d, DemoFile(common, kind));
      Report(std::to_string(d.StepCount()) + " demo steps (" +
                 std::to_string(report.failed_trajectories) + " failed)",
             DemoFile(common, kind));
      if (shifted) {
        const std::string path =
            (Datasets(common) / ("demos_" + oodr::ToString(kind) +
                                 "_shifted.jsonl"))
                .string();
        oodr::SaveDataset(oodr::ShiftActions(d), path);
        Report("shifted demos", path);
      }
    } else if (*enc) {
      const std::string in = dataset_path.empty()
                                 ? (Datasets(common) / "explore.jsonl").string()
                                 : dataset_path;
      const oodr::EncoderModel model = oodr::TrainEncoder(
          oodr::LoadDataset(in), config.encoder,
          StreamSeed(seed, SeedStream::kEncoder));
      fs::create_directories(Models(common));
      const std::string path = (Models(common) / "encoder.json").string();
      oodr::SaveEncoder(model, path);
      std::cout << "held-out residual/action median: "
                << model.report.heldout_median_residual << " / "
                << model.report.heldout_median_action
                << ", anchor mean norm " << model.report.anchor_mean_norm
                << '\n';
      Report("encoder", path);
    } else if (*mdn) {
      const oodr::TaskKind kind = TaskOrDefault(task, config);
      const std::string in =
          dataset_path.empty() ? DemoFile(common, kind) : dataset_path;
      const std::string enc_in = encoder_path.empty()
                                     ? (Models(common) / "encoder.json").string()
                                     : encoder_path;
      const oodr::MdnModel model = oodr::TrainMdn(
          oodr::LoadDataset(in), oodr::LoadEncoder(enc_in), config.mdn,
          StreamSeed(seed, kind == oodr::TaskKind::kPush
                               ? SeedStream::kPushMdn
                               : SeedStream::kPickMdn));
      fs::create_directories(Models(common));
      const std::string path =
          (Models(common) / ("mdn_" + oodr::ToString(kind) + ".json")).string();
      oodr::SaveMdn(model, path);
      std::cout << "nll " << model.report.initial_train_nll << " -> "
                << model.report.epoch_nll.back() << ", gate epsilon "
                << model.gate.epsilon << " temperature "
                << model.gate.temperature << '\n';
      Report("mdn", path);
    } else if (*bc) {
      const oodr::TaskKind kind = TaskOrDefault(task, config);
      const std::string in =
          dataset_path.empty() ? DemoFile(common, kind) : dataset_path;
      oodr::Dataset data = oodr::LoadDataset(in);
      if (shifted) data = oodr::ShiftActions(data);
      SeedStream stream = SeedStream::kPickBc;
      std::string name = oodr::ToString(kind);
      if (kind == oodr::TaskKind::kPush) {
        stream = SeedStream::kPushBc;
      } else if (shifted) {
        stream = SeedStream::kShiftedBc;
        name = "shifted_actions";
      }
      const oodr::BcPolicy policy =
          oodr::TrainBc(data, config.bc, StreamSeed(seed, stream));
      fs::create_directories(Models(common));
      const std::string path = (Models(common) / ("bc_" + name + ".json")).string();
      oodr::SaveBc(policy, path);
      std::cout << "loss " << policy.report.initial_loss << " -> "
                << policy.report.epoch_loss.back() << '\n';
      Report("bc policy", path);
    } else if (*eval) {
      std::vector<oodr::Condition> selected;
      for (const std::string& c : conditions) {
        selected.push_back(oodr::ConditionFromString(c));
      }
      if (selected.empty()) {
        selected.assign(std::begin(oodr::kAllConditions),
                        std::end(oodr::kAllConditions));
      }
      const fs::path models = Models(common);
      const oodr::EncoderModel encoder =
          oodr::LoadEncoder((models / "encoder.json").string());
      oodr::ResultsTable table;
      for (oodr::Condition c : selected) {
        const oodr::TaskKind kind = oodr::ConditionTask(c);
        const oodr::MdnModel density = oodr::LoadMdn(
            (models / ("mdn_" + oodr::ToString(kind) + ".json")).string());
        const std::string bc_name = c == oodr::Condition::kShiftedActions
                                        ? "shifted_actions"
                                        : oodr::ToString(kind);
        const oodr::BcPolicy policy =
            oodr::LoadBc((models / ("bc_" + bc_name + ".json")).string());
        const oodr::TrainedModels trained{&encoder, &density, &policy};
        const std::string trace_dir =
            config.save_traces ? (fs::path(common.out) / "traces").string()
                               : std::string();
        for (oodr::ResultRow& row :
             oodr::EvaluateCondition(c, trained, config, trace_dir)) {
          table.rows.push_back(std::move(row));
        }
      }
      WriteFile(fs::path(common.out) / "results.json",
                oodr::ResultsToJson(table, config, nlohmann::json::object())
                        .dump(2) +
                    "\n");
      WriteFile(fs::path(common.out) / "results.csv", oodr::ResultsCsv(table));
      PrintTable(table);
    } else if (*suite) {
      const oodr::SuiteOutput result = oodr::RunSuite(config, common.out);
      if (result.loaded_from_cache) std::cout << "models loaded from cache\n";
      PrintTable(result.table);
      Report("results", (fs::path(common.out) / "results.json").string());
    } else if (*plots) {
      const std::string in = traces_dir.empty()
                                 ? (fs::path(common.out) / "traces").string()
                                 : traces_dir;
      const std::string dst = plots_dir.empty()
                                  ? (fs::path(common.out) / "plots").string()
                                  : plots_dir;
      const auto written = oodr::ExportPlots(in, dst);
      Report(std::to_string(written.size()) + " csv files", dst);
    }
  } catch (const oodr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const oodr::TrainingError& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return kExitTraining;
  } catch (const oodr::CollectionError& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return kExitTraining;
  } catch (const std::exception& e) {
    // any failure inside a training command counts as a training failure
    if (*enc || *mdn || *bc) {
      std::cerr << "training error: " << e.what() << '\n';
      return kExitTraining;
    }
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOk;
}
