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

#ifndef OODR_EXPERIMENT_H_
#define OODR_EXPERIMENT_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "oodr/dataset.h"
#include "oodr/encoder.h"
#include "oodr/env.h"
#include "oodr/mdn.h"
#include "oodr/policy.h"

namespace oodr {

// Version string baked in at configure time (git describe).
std::string ArtifactVersion();

struct EvalConfig {
  int n_trials = 50;
  double perturb_magnitude = 0.15;
  int perturb_step = 5;
  int max_steps = 200;
};

struct ExperimentConfig {
  TaskKind task_kind = TaskKind::kPickAndDrop;  // used by single-task commands
  int n_demo_traj = 120;
  int n_push_demo_traj = 60;
  int n_explore_traj = 6;
  int explore_steps = 290;
  int n_validation_traj = 20;
  double noise_std = 0.005;
  EncoderTrainConfig encoder;
  MdnConfig mdn;
  BcTrainConfig bc;
  EvalConfig eval;
  uint64_t seed = 2024;
  bool save_datasets = true;
  bool save_traces = true;
};

nlohmann::json ConfigToJson(const ExperimentConfig& config);
// Missing keys keep their defaults; unknown keys and out-of-range values
// raise ConfigError.
ExperimentConfig ConfigFromJson(const nlohmann::json& j);
ExperimentConfig LoadConfig(const std::string& path);
void ValidateConfig(const ExperimentConfig& config);

// Independent seed streams derived from the master seed.
enum class SeedStream : uint64_t {
  kExplore = 1,
  kPickDemos,
  kPushDemos,
  kEncoder,
  kPickMdn,
  kPushMdn,
  kPickBc,
  kShiftedBc,
  kPushBc,
  kValidation,
  kEvaluation,
};
uint64_t StreamSeed(uint64_t master, SeedStream stream);

enum class Condition { kPickAndDrop, kShiftedActions, kPerturbed, kPush };
enum class Variant { kBc, kBcWithRecovery };

inline constexpr Condition kAllConditions[] = {
    Condition::kPickAndDrop, Condition::kShiftedActions,
    Condition::kPerturbed, Condition::kPush};

std::string ToString(Condition condition);
Condition ConditionFromString(const std::string& s);
std::string ToString(Variant variant);

TaskKind ConditionTask(Condition condition);

// Environment seeds shared by both variants of a condition.
std::vector<uint64_t> TrialSeeds(uint64_t master, Condition condition,
                                 int n_trials);

struct TraceRecord {
  int t = 0;
  Eigen::Vector3d gripper_pos = Eigen::Vector3d::Zero();
  Eigen::Vector3d z = Eigen::Vector3d::Zero();
  double density = 0.0;
  double gate_weight = 1.0;
  Eigen::Vector3d bc_delta = Eigen::Vector3d::Zero();
  Eigen::Vector3d recovery_delta = Eigen::Vector3d::Zero();
  Eigen::Vector3d applied_delta = Eigen::Vector3d::Zero();
  GripperCmd gripper_cmd = GripperCmd::kOpen;
};

nlohmann::json TraceRecordToJson(const TraceRecord& r);
TraceRecord TraceRecordFromJson(const nlohmann::json& j);
void WriteTrace(const std::vector<TraceRecord>& trace,
                const std::string& path);
std::vector<TraceRecord> ReadTrace(const std::string& path);

struct EpisodeSettings {
  TaskKind task = TaskKind::kPickAndDrop;
  bool perturb = false;
  double perturb_magnitude = 0.15;
  int perturb_step = 5;
  int max_steps = 200;
};

struct EpisodeResult {
  std::vector<TraceRecord> trace;
  bool grasped = false;
  bool completed = false;
  bool aborted = false;
  std::string diagnostic;
  int steps = 0;
  double min_gate = 1.0;
};

// Fills in the action and diagnostics of a trace record for one step. The
// record arrives with t and gripper_pos set.
using Controller = std::function<Action(const EnvState& state,
                                        const Eigen::VectorXd& observation,
                                        TraceRecord& record)>;
// Builds the controller once the initial state is known.
using ControllerFactory = std::function<Controller(const EnvState& initial)>;

// reset -> optional perturbation -> closed loop until success or the step
// cap. Numeric failures abort the episode and are reported, not thrown.
EpisodeResult RunEpisode(uint64_t env_seed, const EpisodeSettings& settings,
                         const ControllerFactory& factory,
                         const EnvConfig& env = {});

struct TrainedModels {
  const EncoderModel* encoder = nullptr;
  const MdnModel* mdn = nullptr;
  const BcPolicy* bc = nullptr;
};

// BC or BC + recovery. Both variants log density and gate diagnostics; only
// the recovery variant acts on them.
EpisodeResult RunPolicyEpisode(uint64_t env_seed, Variant variant,
                               const TrainedModels& models,
                               const EpisodeSettings& settings,
                               const EnvConfig& env = {});

EpisodeSettings SettingsFor(Condition condition, const EvalConfig& eval);

struct ResultRow {
  Condition condition = Condition::kPickAndDrop;
  Variant variant = Variant::kBc;
  double grasp_rate = 0.0;
  double completion_rate = 0.0;
  double mean_steps = 0.0;
  double mean_min_gate = 0.0;
  int n_trials = 0;
  int aborted = 0;
  uint64_t seed = 0;
  std::vector<uint64_t> trial_seeds;
};

struct ResultsTable {
  std::vector<ResultRow> rows;

  const ResultRow* Find(Condition condition, Variant variant) const;
};

// Runs both variants of one condition on identical seeds. Traces go to
// trace_dir/<condition>/<variant>/trial_NNN.jsonl unless trace_dir is empty.
std::vector<ResultRow> EvaluateCondition(Condition condition,
                                         const TrainedModels& models,
                                         const ExperimentConfig& config,
                                         const std::string& trace_dir);

nlohmann::json ResultsToJson(const ResultsTable& table,
                             const ExperimentConfig& config,
                             const nlohmann::json& training);
std::string ResultsCsv(const ResultsTable& table);

// Everything the suite trains, in memory.
struct SuiteModels {
  EncoderModel encoder;
  MdnModel pick_mdn;
  MdnModel push_mdn;
  BcPolicy pick_bc;
  BcPolicy shifted_bc;
  BcPolicy push_bc;
};

struct SuiteOutput {
  ResultsTable table;
  SuiteModels models;
  nlohmann::json training;  // per-stage training summaries
  bool loaded_from_cache = false;
};

// Collects, trains (or loads models cached under out_dir/models when the
// cached manifest matches the config), evaluates all four conditions and
// writes results.json / results.csv under out_dir. Training failures are
// rethrown as TrainingError naming the stage.
SuiteOutput RunSuite(const ExperimentConfig& config,
                     const std::string& out_dir);

// For each trace file under traces_dir writes <name>_latent.csv,
// <name>_density.csv and <name>_gate.csv mirroring the directory layout
// under plot_dir. Returns the written paths in sorted order.
std::vector<std::string> ExportPlots(const std::string& traces_dir,
                                     const std::string& plot_dir);
std::vector<std::string> ExportTracePlots(const std::string& trace_path,
                                          const std::string& plot_prefix);

}  // namespace oodr

#endif  // OODR_EXPERIMENT_H_
