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

#include "oodr/experiment.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "oodr/errors.h"
#include "oodr/stats.h"

#ifndef OODR_VERSION
#define OODR_VERSION "unknown"
#endif

namespace oodr {
namespace fs = std::filesystem;
namespace {

using nlohmann::json;

// Reads optional keys of one config section and rejects anything unknown.
class SectionReader {
 public:
  SectionReader(const json& j, std::string name)
      : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + " must be an object");
  }

  template <typename T>
  void Get(const std::string& key, T& out) {
    known_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name_ + "." + key + " has the wrong type");
    }
  }

  const json* Child(const std::string& key) {
    known_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void Finish() const {
    for (const auto& item : j_.items()) {
      if (!known_.count(item.key())) {
        throw ConfigError("unknown config key '" + name_ + "." + item.key() +
                          "'");
      }
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> known_;
};

json EncoderConfigJson(const EncoderTrainConfig& c) {
  return {{"hidden", c.hidden},
          {"learning_rate", c.learning_rate},
          {"anchor_weight", c.anchor_weight},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"holdout_fraction", c.holdout_fraction}};
}

json MdnConfigJson(const MdnConfig& c) {
  return {{"components", c.components},
          {"hidden", c.hidden},
          {"sigma_floor", c.sigma_floor},
          {"reconstruction", c.reconstruction},
          {"reconstruction_weight", c.reconstruction_weight},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"gate_quantile", c.gate_quantile},
          {"recovery_scale", c.recovery_scale}};
}

json BcConfigJson(const BcTrainConfig& c) {
  return {{"hidden", c.hidden},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"action_scale", c.action_scale}};
}

json Vec(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Eigen::Vector3d VecFrom(const json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw FormatError("expected a 3-vector");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::string Num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

// The parts of the config that determine trained models.
json TrainingKey(const ExperimentConfig& config) {
  json j = ConfigToJson(config);
  for (const char* key :
       {"eval", "task_kind", "save_datasets", "save_traces"}) {
    j.erase(key);
  }
  return j;
}

template <typename F>
auto Stage(const std::string& name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw TrainingError("stage '" + name + "' failed: " + e.what());
  }
}

json MdnSummary(const MdnModel& m) {
  const MdnReport& r = m.report;
  json j = {{"initial_nll", r.initial_train_nll},
            {"final_nll", r.epoch_nll.empty() ? r.initial_train_nll
                                              : r.epoch_nll.back()},
            {"gate",
             {{"epsilon", m.gate.epsilon},
              {"temperature", m.gate.temperature},
              {"recovery_scale", m.gate.recovery_scale}}},
            {"gate_degenerate", r.gate_degenerate}};
  if (!r.heldout_nll.empty()) {
    j["initial_heldout_nll"] = r.initial_heldout_nll;
    j["final_heldout_nll"] = r.heldout_nll.back();
  }
  return j;
}

json BcSummary(const BcPolicy& p) {
  return {{"initial_loss", p.report.initial_loss},
          {"final_loss", p.report.epoch_loss.empty()
                             ? p.report.initial_loss
                             : p.report.epoch_loss.back()}};
}

json EncoderSummary(const EncoderModel& e) {
  const EncoderReport& r = e.report;
  const double ratio = r.heldout_median_action > 0.0
                           ? r.heldout_median_residual / r.heldout_median_action
                           : 0.0;
  return {{"final_loss",
           r.epoch_loss.empty() ? r.initial_loss : r.epoch_loss.back()},
          {"heldout_median_residual", r.heldout_median_residual},
          {"heldout_median_action", r.heldout_median_action},
          {"residual_ratio", ratio},
          {"anchor_mean_norm", r.anchor_mean_norm},
          {"train_transitions", r.train_transitions},
          {"heldout_transitions", r.heldout_transitions}};
}

struct ModelPaths {
  fs::path dir;
  fs::path Encoder() const { return dir / "encoder.json"; }
  fs::path PickMdn() const { return dir / "mdn_pick_and_drop.json"; }
  fs::path PushMdn() const { return dir / "mdn_push.json"; }
  fs::path PickBc() const { return dir / "bc_pick_and_drop.json"; }
  fs::path ShiftedBc() const { return dir / "bc_shifted_actions.json"; }
  fs::path PushBc() const { return dir / "bc_push.json"; }
  fs::path Training() const { return dir / "training.json"; }
  fs::path Manifest() const { return dir / "manifest.json"; }

  bool Complete() const {
    for (const fs::path& p : {Encoder(), PickMdn(), PushMdn(), PickBc(),
                              ShiftedBc(), PushBc(), Training(), Manifest()}) {
      if (!fs::exists(p)) return false;
    }
    return true;
  }
};

json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

bool CacheMatches(const ModelPaths& paths, const ExperimentConfig& config) {
  if (!paths.Complete()) return false;
  try {
    const json manifest = ReadJsonFile(paths.Manifest());
    return manifest.at("training_config") == TrainingKey(config);
  } catch (const std::exception&) {
    return false;
  }
}

std::string TrialName(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trial_%03d.jsonl", i);
  return buf;
}

}  // namespace

std::string ArtifactVersion() { return OODR_VERSION; }

nlohmann::json ConfigToJson(const ExperimentConfig& c) {
  return {{"task_kind", ToString(c.task_kind)},
          {"n_demo_traj", c.n_demo_traj},
          {"n_push_demo_traj", c.n_push_demo_traj},
          {"n_explore_traj", c.n_explore_traj},
          {"explore_steps", c.explore_steps},
          {"n_validation_traj", c.n_validation_traj},
          {"noise_std", c.noise_std},
          {"encoder", EncoderConfigJson(c.encoder)},
          {"mdn", MdnConfigJson(c.mdn)},
          {"bc", BcConfigJson(c.bc)},
          {"eval",
           {{"n_trials", c.eval.n_trials},
            {"perturb_magnitude", c.eval.perturb_magnitude},
            {"perturb_step", c.eval.perturb_step},
            {"max_steps", c.eval.max_steps}}},
          {"seed", c.seed},
          {"save_datasets", c.save_datasets},
          {"save_traces", c.save_traces}};
}

ExperimentConfig ConfigFromJson(const nlohmann::json& j) {
  ExperimentConfig c;
  SectionReader top(j, "config");
  std::string task = ToString(c.task_kind);
  top.Get("task_kind", task);
  c.task_kind = TaskKindFromString(task);
  top.Get("n_demo_traj", c.n_demo_traj);
  top.Get("n_push_demo_traj", c.n_push_demo_traj);
  top.Get("n_explore_traj", c.n_explore_traj);
  top.Get("explore_steps", c.explore_steps);
  top.Get("n_validation_traj", c.n_validation_traj);
  top.Get("noise_std", c.noise_std);
  top.Get("seed", c.seed);
  top.Get("save_datasets", c.save_datasets);
  top.Get("save_traces", c.save_traces);
  if (const json* e = top.Child("encoder")) {
    SectionReader r(*e, "encoder");
    r.Get("hidden", c.encoder.hidden);
    r.Get("learning_rate", c.encoder.learning_rate);
    r.Get("anchor_weight", c.encoder.anchor_weight);
    r.Get("batch_size", c.encoder.batch_size);
    r.Get("epochs", c.encoder.epochs);
    r.Get("holdout_fraction", c.encoder.holdout_fraction);
    r.Finish();
  }
  if (const json* m = top.Child("mdn")) {
    SectionReader r(*m, "mdn");
    r.Get("components", c.mdn.components);
    r.Get("hidden", c.mdn.hidden);
    r.Get("sigma_floor", c.mdn.sigma_floor);
    r.Get("reconstruction", c.mdn.reconstruction);
    r.Get("reconstruction_weight", c.mdn.reconstruction_weight);
    r.Get("learning_rate", c.mdn.learning_rate);
    r.Get("batch_size", c.mdn.batch_size);
    r.Get("epochs", c.mdn.epochs);
    r.Get("gate_quantile", c.mdn.gate_quantile);
    r.Get("recovery_scale", c.mdn.recovery_scale);
    r.Finish();
  }
  if (const json* b = top.Child("bc")) {
    SectionReader r(*b, "bc");
    r.Get("hidden", c.bc.hidden);
    r.Get("learning_rate", c.bc.learning_rate);
    r.Get("batch_size", c.bc.batch_size);
    r.Get("epochs", c.bc.epochs);
    r.Get("action_scale", c.bc.action_scale);
    r.Finish();
  }
  if (const json* e = top.Child("eval")) {
    SectionReader r(*e, "eval");
    r.Get("n_trials", c.eval.n_trials);
    r.Get("perturb_magnitude", c.eval.perturb_magnitude);
    r.Get("perturb_step", c.eval.perturb_step);
    r.Get("max_steps", c.eval.max_steps);
    r.Finish();
  }
  top.Finish();
  ValidateConfig(c);
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return ConfigFromJson(j);
}

void ValidateConfig(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.n_demo_traj >= 1, "n_demo_traj must be >= 1");
  require(c.n_push_demo_traj >= 1, "n_push_demo_traj must be >= 1");
  require(c.n_explore_traj >= 1, "n_explore_traj must be >= 1");
  require(c.explore_steps >= 2, "explore_steps must be >= 2");
  require(c.n_validation_traj >= 1, "n_validation_traj must be >= 1");
  require(c.noise_std >= 0.0 && std::isfinite(c.noise_std),
          "noise_std must be finite and non-negative");
  require(c.eval.n_trials >= 1, "eval.n_trials must be >= 1");
  require(c.eval.max_steps >= 0, "eval.max_steps must be >= 0");
  require(c.eval.perturb_step >= 0, "eval.perturb_step must be >= 0");
  require(c.eval.perturb_magnitude > 0.0 &&
              std::isfinite(c.eval.perturb_magnitude),
          "eval.perturb_magnitude must be positive");
  for (const auto* hidden : {&c.encoder.hidden, &c.mdn.hidden, &c.bc.hidden}) {
    for (int h : *hidden) require(h >= 1, "hidden layer sizes must be >= 1");
  }
  require(c.encoder.epochs >= 1 && c.encoder.batch_size >= 1,
          "encoder epochs and batch_size must be >= 1");
  require(c.encoder.holdout_fraction >= 0.0 && c.encoder.holdout_fraction < 1,
          "encoder.holdout_fraction must lie in [0, 1)");
  require(c.mdn.components >= 1, "mdn.components must be >= 1");
  require(c.mdn.epochs >= 1 && c.mdn.batch_size >= 1,
          "mdn epochs and batch_size must be >= 1");
  require(c.mdn.gate_quantile > 0.0 && c.mdn.gate_quantile < 50.0,
          "mdn.gate_quantile must lie in (0, 50)");
  require(c.mdn.recovery_scale > 0.0, "mdn.recovery_scale must be positive");
  require(c.mdn.sigma_floor > 0.0, "mdn.sigma_floor must be positive");
  require(c.bc.epochs >= 1 && c.bc.batch_size >= 1,
          "bc epochs and batch_size must be >= 1");
  require(c.bc.action_scale > 0.0, "bc.action_scale must be positive");
  for (double lr : {c.encoder.learning_rate, c.mdn.learning_rate,
                    c.bc.learning_rate}) {
    require(lr > 0.0 && std::isfinite(lr), "learning rates must be positive");
  }
}

uint64_t StreamSeed(uint64_t master, SeedStream stream) {
  return MixSeed(master, static_cast<uint64_t>(stream));
}

std::string ToString(Condition condition) {
  switch (condition) {
    case Condition::kPickAndDrop:
      return "pick_and_drop";
    case Condition::kShiftedActions:
      return "shifted_actions";
    case Condition::kPerturbed:
      return "perturbed";
    case Condition::kPush:
      return "push";
  }
  return "unknown";
}

Condition ConditionFromString(const std::string& s) {
  for (Condition c : kAllConditions) {
    if (ToString(c) == s) return c;
  }
  throw ConfigError("unknown condition '" + s + "'");
}

std::string ToString(Variant variant) {
  return variant == Variant::kBc ? "bc" : "bc_with_recovery";
}

TaskKind ConditionTask(Condition condition) {
  return condition == Condition::kPush ? TaskKind::kPush
                                       : TaskKind::kPickAndDrop;
}

std::vector<uint64_t> TrialSeeds(uint64_t master, Condition condition,
                                 int n_trials) {
  // the three pick conditions share object placements
  const uint64_t base =
      MixSeed(StreamSeed(master, SeedStream::kEvaluation),
              static_cast<uint64_t>(ConditionTask(condition)));
  std::vector<uint64_t> seeds(std::max(0, n_trials));
  for (int i = 0; i < n_trials; ++i) seeds[i] = MixSeed(base, i);
  return seeds;
}

nlohmann::json TraceRecordToJson(const TraceRecord& r) {
  return {{"t", r.t},
          {"gripper_pos", Vec(r.gripper_pos)},
          {"z", Vec(r.z)},
          {"density", r.density},
          {"gate_weight", r.gate_weight},
          {"bc_delta", Vec(r.bc_delta)},
          {"recovery_delta", Vec(r.recovery_delta)},
          {"applied_delta", Vec(r.applied_delta)},
          {"gripper_cmd", ToString(r.gripper_cmd)}};
}

TraceRecord TraceRecordFromJson(const nlohmann::json& j) {
  TraceRecord r;
  try {
    r.t = j.at("t").get<int>();
    r.gripper_pos = VecFrom(j.at("gripper_pos"));
    r.z = VecFrom(j.at("z"));
    r.density = j.at("density").get<double>();
    r.gate_weight = j.at("gate_weight").get<double>();
    r.bc_delta = VecFrom(j.at("bc_delta"));
    r.recovery_delta = VecFrom(j.at("recovery_delta"));
    r.applied_delta = VecFrom(j.at("applied_delta"));
    r.gripper_cmd = GripperCmdFromString(j.at("gripper_cmd").get<std::string>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("trace record: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("trace record: ") + e.what());
  }
  return r;
}

void WriteTrace(const std::vector<TraceRecord>& trace,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write trace " + path);
  for (const TraceRecord& r : trace) out << TraceRecordToJson(r).dump() << '\n';
}

std::vector<TraceRecord> ReadTrace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read trace " + path);
  std::vector<TraceRecord> trace;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      trace.push_back(TraceRecordFromJson(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw FormatError(path + ": " + e.what());
    }
  }
  return trace;
}

EpisodeResult RunEpisode(uint64_t env_seed, const EpisodeSettings& settings,
                         const ControllerFactory& factory,
                         const EnvConfig& env) {
  EpisodeResult result;
  Rng rng(env_seed);
  EnvState state = Reset(rng, settings.task, env);
  Controller controller;
  try {
    controller = factory(state);
  } catch (const NumericError& e) {
    result.aborted = true;
    result.diagnostic = e.what();
    return result;
  }
  for (int t = 0; t < settings.max_steps; ++t) {
    if (settings.perturb && t == settings.perturb_step) {
      state = Perturb(state, settings.perturb_magnitude, rng, env);
    }
    const Eigen::VectorXd observation = Render(state, env);
    TraceRecord record;
    record.t = t;
    record.gripper_pos = state.gripper_pos;
    Action action;
    try {
      action = controller(state, observation, record);
      if (!action.delta.allFinite()) {
        throw NumericError("controller produced a non-finite action");
      }
    } catch (const NumericError& e) {
      result.aborted = true;
      result.diagnostic = "t=" + std::to_string(t) + ": " + e.what();
      break;
    }
    state = Step(state, action, env);
    result.trace.push_back(record);
    result.min_gate = std::min(result.min_gate, record.gate_weight);
    result.grasped = result.grasped || state.attached;
    if (EvaluateSuccess(state, env).completed) {
      result.completed = true;
      break;
    }
  }
  result.steps = static_cast<int>(result.trace.size());
  return result;
}

EpisodeResult RunPolicyEpisode(uint64_t env_seed, Variant variant,
                               const TrainedModels& models,
                               const EpisodeSettings& settings,
                               const EnvConfig& env) {
  const ControllerFactory factory = [&](const EnvState& initial) {
    auto policy = std::make_shared<const AugmentedPolicy>(
        models.bc, models.encoder, models.mdn, models.mdn->gate,
        Render(initial, env), env);
    return Controller([policy, variant](const EnvState&,
                                        const Eigen::VectorXd& observation,
                                        TraceRecord& record) {
      const CombinedStep step = policy->Act(observation);
      record.z = step.latent;
      record.density = step.density;
      record.gate_weight = step.gate;
      record.bc_delta = step.bc_delta;
      record.recovery_delta = step.recovery_delta;
      Action action = step.action;
      if (variant == Variant::kBc) {
        action.delta = step.bc_delta;
        action.gripper = step.bc_gripper;
      }
      record.applied_delta = action.delta;
      record.gripper_cmd = action.gripper;
      return action;
    });
  };
  return RunEpisode(env_seed, settings, factory, env);
}

EpisodeSettings SettingsFor(Condition condition, const EvalConfig& eval) {
  EpisodeSettings s;
  s.task = ConditionTask(condition);
  s.perturb = condition == Condition::kPerturbed;
  s.perturb_magnitude = eval.perturb_magnitude;
  s.perturb_step = eval.perturb_step;
  s.max_steps = eval.max_steps;
  return s;
}

const ResultRow* ResultsTable::Find(Condition condition,
                                    Variant variant) const {
  for (const ResultRow& row : rows) {
    if (row.condition == condition && row.variant == variant) return &row;
  }
  return nullptr;
}

std::vector<ResultRow> EvaluateCondition(Condition condition,
                                         const TrainedModels& models,
                                         const ExperimentConfig& config,
                                         const std::string& trace_dir) {
  const EpisodeSettings settings = SettingsFor(condition, config.eval);
  const std::vector<uint64_t> seeds =
      TrialSeeds(config.seed, condition, config.eval.n_trials);
  std::vector<ResultRow> rows;
  for (Variant variant : {Variant::kBc, Variant::kBcWithRecovery}) {
    fs::path dir;
    if (!trace_dir.empty()) {
      dir = fs::path(trace_dir) / ToString(condition) / ToString(variant);
      fs::create_directories(dir);
    }
    ResultRow row;
    row.condition = condition;
    row.variant = variant;
    row.n_trials = static_cast<int>(seeds.size());
    row.seed = StreamSeed(config.seed, SeedStream::kEvaluation);
    row.trial_seeds = seeds;
    int grasped = 0, completed = 0;
    double steps = 0.0, min_gate = 0.0;
    for (size_t i = 0; i < seeds.size(); ++i) {
      const EpisodeResult r =
          RunPolicyEpisode(seeds[i], variant, models, settings);
      grasped += r.grasped;
      completed += r.completed;
      row.aborted += r.aborted;
      steps += r.steps;
      min_gate += r.min_gate;
      if (!dir.empty()) {
        WriteTrace(r.trace, (dir / TrialName(static_cast<int>(i))).string());
      }
    }
    const double n = static_cast<double>(seeds.size());
    row.grasp_rate = grasped / n;
    row.completion_rate = completed / n;
    row.mean_steps = steps / n;
    row.mean_min_gate = min_gate / n;
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json ResultsToJson(const ResultsTable& table,
                             const ExperimentConfig& config,
                             const nlohmann::json& training) {
  json rows = json::array();
  for (const ResultRow& r : table.rows) {
    rows.push_back({{"condition", ToString(r.condition)},
                    {"model_variant", ToString(r.variant)},
                    {"grasp_rate", r.grasp_rate},
                    {"completion_rate", r.completion_rate},
                    {"mean_steps", r.mean_steps},
                    {"mean_min_gate", r.mean_min_gate},
                    {"n_trials", r.n_trials},
                    {"aborted", r.aborted},
                    {"seed", r.seed},
                    {"trial_seeds", r.trial_seeds}});
  }
  return {{"version", ArtifactVersion()},
          {"config", ConfigToJson(config)},
          {"training", training},
          {"results", rows}};
}

std::string ResultsCsv(const ResultsTable& table) {
  std::ostringstream out;
  out << "condition,model_variant,grasp_rate,completion_rate,mean_steps,"
         "mean_min_gate,n_trials,aborted,seed\n";
  for (const ResultRow& r : table.rows) {
    out << ToString(r.condition) << ',' << ToString(r.variant) << ','
        << Num(r.grasp_rate) << ',' << Num(r.completion_rate) << ','
        << Num(r.mean_steps) << ',' << Num(r.mean_min_gate) << ','
        << r.n_trials << ',' << r.aborted << ',' << r.seed << '\n';
  }
  return out.str();
}

SuiteOutput RunSuite(const ExperimentConfig& config,
                     const std::string& out_dir) {
  ValidateConfig(config);
  const fs::path out(out_dir);
  const ModelPaths paths{out / "models"};
  fs::create_directories(paths.dir);
  fs::create_directories(out / "datasets");

  SuiteOutput result;
  SuiteModels& m = result.models;
  if (CacheMatches(paths, config)) {
    Stage("load cached models", [&] {
      m.encoder = LoadEncoder(paths.Encoder().string());
      m.pick_mdn = LoadMdn(paths.PickMdn().string());
      m.push_mdn = LoadMdn(paths.PushMdn().string());
      m.pick_bc = LoadBc(paths.PickBc().string());
      m.shifted_bc = LoadBc(paths.ShiftedBc().string());
      m.push_bc = LoadBc(paths.PushBc().string());
      result.training = ReadJsonFile(paths.Training());
    });
    result.loaded_from_cache = true;
  } else {
    const uint64_t s = config.seed;
    const Dataset explore = Stage("collect-explore", [&] {
      return CollectExplore(config.n_explore_traj, config.explore_steps,
                            StreamSeed(s, SeedStream::kExplore));
    });
    const Dataset pick = Stage("collect-demos pick_and_drop", [&] {
      return CollectDemos(config.n_demo_traj, TaskKind::kPickAndDrop,
                          config.noise_std,
                          StreamSeed(s, SeedStream::kPickDemos));
    });
    const Dataset push = Stage("collect-demos push", [&] {
      return CollectDemos(config.n_push_demo_traj, TaskKind::kPush,
                          config.noise_std,
                          StreamSeed(s, SeedStream::kPushDemos));
    });
    const Dataset validation = Stage("collect-demos validation", [&] {
      return CollectDemos(config.n_validation_traj, TaskKind::kPickAndDrop,
                          config.noise_std,
                          StreamSeed(s, SeedStream::kValidation));
    });
    const Dataset shifted =
        Stage("shift-actions", [&] { return ShiftActions(pick); });
    if (config.save_datasets) {
      SaveDataset(explore, (out / "datasets" / "explore.jsonl").string());
      SaveDataset(pick, (out / "datasets" / "demos_pick_and_drop.jsonl").string());
      SaveDataset(push, (out / "datasets" / "demos_push.jsonl").string());
      SaveDataset(validation,
                  (out / "datasets" / "validation_pick_and_drop.jsonl").string());
    }

    m.encoder = Stage("train-encoder", [&] {
      return TrainEncoder(explore, config.encoder,
                          StreamSeed(s, SeedStream::kEncoder));
    });
    m.pick_mdn = Stage("train-mdn pick_and_drop", [&] {
      return TrainMdn(pick, m.encoder, config.mdn,
                      StreamSeed(s, SeedStream::kPickMdn), &validation);
    });
    // the push density reuses the pick-task encoder as is
    m.push_mdn = Stage("train-mdn push", [&] {
      return TrainMdn(push, m.encoder, config.mdn,
                      StreamSeed(s, SeedStream::kPushMdn));
    });
    m.pick_bc = Stage("train-bc pick_and_drop", [&] {
      return TrainBc(pick, config.bc, StreamSeed(s, SeedStream::kPickBc));
    });
    m.shifted_bc = Stage("train-bc shifted_actions", [&] {
      return TrainBc(shifted, config.bc, StreamSeed(s, SeedStream::kShiftedBc));
    });
    m.push_bc = Stage("train-bc push", [&] {
      return TrainBc(push, config.bc, StreamSeed(s, SeedStream::kPushBc));
    });

    result.training = {
        {"datasets",
         {{"explore_steps", explore.StepCount()},
          {"pick_demo_steps", pick.StepCount()},
          {"push_demo_steps", push.StepCount()},
          {"shifted_demo_steps", shifted.StepCount()},
          {"validation_steps", validation.StepCount()}}},
        {"encoder", EncoderSummary(m.encoder)},
        {"mdn_pick_and_drop", MdnSummary(m.pick_mdn)},
        {"mdn_push", MdnSummary(m.push_mdn)},
        {"bc_pick_and_drop", BcSummary(m.pick_bc)},
        {"bc_shifted_actions", BcSummary(m.shifted_bc)},
        {"bc_push", BcSummary(m.push_bc)}};

    SaveEncoder(m.encoder, paths.Encoder().string());
    SaveMdn(m.pick_mdn, paths.PickMdn().string());
    SaveMdn(m.push_mdn, paths.PushMdn().string());
    SaveBc(m.pick_bc, paths.PickBc().string());
    SaveBc(m.shifted_bc, paths.ShiftedBc().string());
    SaveBc(m.push_bc, paths.PushBc().string());
    WriteText(paths.Training(), result.training.dump(2) + "\n");
    WriteText(paths.Manifest(),
              json{{"version", ArtifactVersion()},
                   {"training_config", TrainingKey(config)}}
                      .dump(2) +
                  "\n");
  }

  const std::string trace_dir =
      config.save_traces ? (out / "traces").string() : std::string();
  for (Condition condition : kAllConditions) {
    TrainedModels models{&m.encoder, &m.pick_mdn, &m.pick_bc};
    if (condition == Condition::kShiftedActions) models.bc = &m.shifted_bc;
    if (condition == Condition::kPush) {
      models.mdn = &m.push_mdn;
      models.bc = &m.push_bc;
    }
    for (ResultRow& row :
         EvaluateCondition(condition, models, config, trace_dir)) {
      result.table.rows.push_back(std::move(row));
    }
  }

  WriteText(out / "results.json",
            ResultsToJson(result.table, config, result.training).dump(2) +
                "\n");
  WriteText(out / "results.csv", ResultsCsv(result.table));
  return result;
}

std::vector<std::string> ExportTracePlots(const std::string& trace_path,
                                          const std::string& plot_prefix) {
  const std::vector<TraceRecord> trace = ReadTrace(trace_path);
  std::ostringstream latent, density, gate;
  latent << "t,z_x,z_y\n";
  density << "t,density\n";
  gate << "t,gate_weight\n";
  for (const TraceRecord& r : trace) {
    latent << r.t << ',' << Num(r.z.x()) << ',' << Num(r.z.y()) << '\n';
    density << r.t << ',' << Num(r.density) << '\n';
    gate << r.t << ',' << Num(r.gate_weight) << '\n';
  }
  const fs::path parent = fs::path(plot_prefix).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::vector<std::string> written = {plot_prefix + "_density.csv",
                                      plot_prefix + "_gate.csv",
                                      plot_prefix + "_latent.csv"};
  WriteText(written[0], density.str());
  WriteText(written[1], gate.str());
  WriteText(written[2], latent.str());
  return written;
}

std::vector<std::string> ExportPlots(const std::string& traces_dir,
                                     const std::string& plot_dir) {
  if (!fs::is_directory(traces_dir)) {
    throw FormatError("trace directory " + traces_dir + " does not exist");
  }
  std::vector<fs::path> traces;
  for (const auto& entry : fs::recursive_directory_iterator(traces_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      traces.push_back(entry.path());
    }
  }
  std::sort(traces.begin(), traces.end());
  std::vector<std::string> written;
  for (const fs::path& p : traces) {
    fs::path rel = fs::relative(p, traces_dir);
    rel.replace_extension();
    for (std::string& w : ExportTracePlots(
             p.string(), (fs::path(plot_dir) / rel).string())) {
      written.push_back(std::move(w));
    }
  }
  return written;
}

}  // namespace oodr
