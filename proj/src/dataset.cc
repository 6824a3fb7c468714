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

#include "oodr/dataset.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "oodr/errors.h"

namespace oodr {
namespace {

using nlohmann::json;

// exploration walk parameters
constexpr double kVelocitySmoothing = 0.6;
constexpr double kVelocityNoise = 0.03;
constexpr double kCoveragePull = 0.03;
constexpr int kCarryPeriod = 60;
constexpr int kCarryMaxSteps = 45;
constexpr double kCarryNoise = 0.005;
constexpr double kToggleProbability = 0.02;

std::string ToString(CollectionKind kind) {
  return kind == CollectionKind::kExplore ? "explore" : "demo";
}

CollectionKind CollectionKindFromString(const std::string& s) {
  if (s == "demo") return CollectionKind::kDemo;
  if (s == "explore") return CollectionKind::kExplore;
  throw FormatError("unknown collection kind '" + s + "'");
}

json VectorJson(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd VectorFromJson(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

Eigen::Vector3d CellCenter(int cell, const EnvConfig& config) {
  const int ix = cell % 8;
  const int iy = (cell / 8) % 8;
  const int iz = cell / 64;
  return {(ix + 0.5) / 8.0, (iy + 0.5) / 8.0,
          (iz + 0.5) / 4.0 * config.max_height};
}

// nearest cell (Euclidean, cell centers) that has not been visited yet
int NearestUnvisited(const Eigen::Vector3d& p,
                     const std::array<int, kOccupancyCells>& visits,
                     const EnvConfig& config) {
  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int c = 0; c < kOccupancyCells; ++c) {
    if (visits[c] > 0) continue;
    const double d = (CellCenter(c, config) - p).norm();
    if (d < best_dist) {
      best_dist = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

size_t Dataset::StepCount() const {
  size_t n = 0;
  for (const Trajectory& t : trajectories) n += t.steps.size();
  return n;
}

Dataset CollectDemos(int n_traj, TaskKind task, double noise_std,
                     uint64_t seed, const EnvConfig& config,
                     CollectReport* report) {
  if (n_traj < 1) throw InputError("n_traj must be at least 1");
  Dataset data;
  data.metadata = {task, seed, CollectionKind::kDemo};
  Rng rng(seed);
  int failures = 0;
  for (int i = 0; i < n_traj; ++i) {
    EnvState state = Reset(rng, task, config);
    Trajectory traj;
    traj.initial_observation = Render(state, config);
    Eigen::VectorXd obs = traj.initial_observation;
    bool completed = false;
    for (int t = 0; t < config.max_steps && !completed; ++t) {
      const Action a = ScriptedExpert(state, noise_std, rng, config);
      state = Step(state, a, config);
      Eigen::VectorXd next = Render(state, config);
      traj.steps.push_back({obs, a.delta, a.gripper, next});
      obs = std::move(next);
      completed = EvaluateSuccess(state, config).completed;
    }
    if (!completed) ++failures;
    data.trajectories.push_back(std::move(traj));
  }
  if (report != nullptr) report->failed_trajectories = failures;
  if (failures * 10 > n_traj) {
    throw CollectionError("expert failed on " + std::to_string(failures) +
                          " of " + std::to_string(n_traj) + " trajectories");
  }
  return data;
}

Dataset CollectExplore(int n_traj, int steps_per_traj, uint64_t seed,
                       const EnvConfig& config) {
  if (n_traj < 1) throw InputError("n_traj must be at least 1");
  if (steps_per_traj < 1) throw InputError("steps_per_traj must be positive");
  Dataset data;
  data.metadata = {TaskKind::kPickAndDrop, seed, CollectionKind::kExplore};
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::array<int, kOccupancyCells> visits{};

  for (int i = 0; i < n_traj; ++i) {
    EnvState state = Reset(rng, TaskKind::kPickAndDrop, config);
    visits[OccupancyCell(state.gripper_pos, config)]++;
    Trajectory traj;
    traj.initial_observation = Render(state, config);
    Eigen::VectorXd obs = traj.initial_observation;
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    int carry_steps = -1;  // < 0 when not carrying
    bool carried = false;
    Eigen::Vector3d destination = Eigen::Vector3d::Zero();

    for (int t = 0; t < steps_per_traj; ++t) {
      Action a;
      if (carry_steps < 0 && t > 0 && t % kCarryPeriod == 0) {
        carry_steps = 0;
        carried = false;
        do {
          destination = {0.05 + 0.9 * unit(rng), 0.05 + 0.9 * unit(rng), 0.0};
        } while ((destination - state.object_pos).head<2>().norm() < 0.2);
      }
      if (carry_steps >= 0) {
        EnvState goal = state;
        goal.target_pos = destination;
        a = ScriptedExpert(goal, kCarryNoise, rng, config);
        ++carry_steps;
        carried = carried || state.attached;
        if ((carried && !state.attached) || carry_steps >= kCarryMaxSteps) {
          carry_steps = -1;
        }
      } else {
        int cell = NearestUnvisited(state.gripper_pos, visits, config);
        Eigen::Vector3d pull = Eigen::Vector3d::Zero();
        if (cell >= 0) {
          const Eigen::Vector3d d = CellCenter(cell, config) - state.gripper_pos;
          if (d.norm() > 1e-9) pull = kCoveragePull * d.normalized();
        }
        const Eigen::Vector3d noise(normal(rng), normal(rng), normal(rng));
        velocity = kVelocitySmoothing * velocity + kVelocityNoise * noise + pull;
        a.delta = ClipDelta(velocity, config);
        bool closed = state.gripper_closed;
        if (unit(rng) < kToggleProbability) closed = !closed;
        a.gripper = closed ? GripperCmd::kClose : GripperCmd::kOpen;
      }
      // stay strictly inside the workspace so recorded actions are exact
      a.delta = ClipToWorkspace(state.gripper_pos + a.delta, config) -
                state.gripper_pos;
      state = Step(state, a, config);
      visits[OccupancyCell(state.gripper_pos, config)]++;
      Eigen::VectorXd next = Render(state, config);
      traj.steps.push_back({obs, a.delta, a.gripper, next});
      obs = std::move(next);
    }
    data.trajectories.push_back(std::move(traj));
  }
  return data;
}

Dataset ShiftActions(const Dataset& dataset) {
  Dataset out;
  out.metadata = dataset.metadata;
  for (const Trajectory& traj : dataset.trajectories) {
    if (traj.steps.size() < 2) {
      throw InputError("cannot shift a trajectory with fewer than 2 steps");
    }
    Trajectory shifted;
    shifted.initial_observation = traj.initial_observation;
    for (size_t t = 0; t + 1 < traj.steps.size(); ++t) {
      Transition step = traj.steps[t];
      step.action = traj.steps[t + 1].action;
      step.gripper = traj.steps[t + 1].gripper;
      shifted.steps.push_back(std::move(step));
    }
    out.trajectories.push_back(std::move(shifted));
  }
  return out;
}

int OccupancyCell(const Eigen::Vector3d& p, const EnvConfig& config) {
  auto bin = [](double v, int n) {
    return std::clamp(static_cast<int>(std::floor(v * n)), 0, n - 1);
  };
  const int ix = bin(p.x(), 8);
  const int iy = bin(p.y(), 8);
  const int iz = bin(p.z() / config.max_height, 4);
  return ix + 8 * iy + 64 * iz;
}

bool ChainConsistent(const Dataset& dataset) {
  for (const Trajectory& traj : dataset.trajectories) {
    if (!traj.steps.empty() &&
        traj.steps.front().observation != traj.initial_observation) {
      return false;
    }
    for (size_t t = 0; t + 1 < traj.steps.size(); ++t) {
      if (traj.steps[t].next_observation != traj.steps[t + 1].observation) {
        return false;
      }
    }
  }
  return true;
}

void WriteDataset(const Dataset& dataset, std::ostream& out) {
  json meta;
  meta["record"] = "metadata";
  meta["task_kind"] = ToString(dataset.metadata.task);
  meta["seed"] = dataset.metadata.seed;
  meta["collection_kind"] = ToString(dataset.metadata.kind);
  meta["n_trajectories"] = dataset.trajectories.size();
  out << meta.dump() << '\n';
  for (const Trajectory& traj : dataset.trajectories) {
    json record;
    record["initial_observation"] = VectorJson(traj.initial_observation);
    json steps = json::array();
    for (const Transition& s : traj.steps) {
      json step;
      step["obs"] = VectorJson(s.observation);
      step["action"] = VectorJson(s.action);
      step["gripper_cmd"] = ToString(s.gripper);
      step["next_obs"] = VectorJson(s.next_observation);
      steps.push_back(std::move(step));
    }
    record["steps"] = std::move(steps);
    out << record.dump() << '\n';
  }
}

Dataset ReadDataset(std::istream& in) {
  Dataset data;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("dataset file is empty");
  try {
    const json meta = json::parse(line);
    data.metadata.task = TaskKindFromString(meta.at("task_kind"));
    data.metadata.seed = meta.at("seed").get<uint64_t>();
    data.metadata.kind = CollectionKindFromString(meta.at("collection_kind"));
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json record = json::parse(line);
      Trajectory traj;
      traj.initial_observation = VectorFromJson(record.at("initial_observation"));
      for (const json& step : record.at("steps")) {
        Transition s;
        s.observation = VectorFromJson(step.at("obs"));
        const Eigen::VectorXd action = VectorFromJson(step.at("action"));
        if (action.size() != 3) throw FormatError("action must have 3 entries");
        s.action = action;
        s.gripper = GripperCmdFromString(step.at("gripper_cmd"));
        s.next_observation = VectorFromJson(step.at("next_obs"));
        traj.steps.push_back(std::move(s));
      }
      data.trajectories.push_back(std::move(traj));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
  return data;
}

void SaveDataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  WriteDataset(dataset, out);
}

Dataset LoadDataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return ReadDataset(in);
}

}  // namespace oodr
