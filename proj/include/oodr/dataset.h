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

#ifndef OODR_DATASET_H_
#define OODR_DATASET_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oodr/env.h"

namespace oodr {

enum class CollectionKind { kDemo, kExplore };

struct Transition {
  Eigen::VectorXd observation;
  Eigen::Vector3d action = Eigen::Vector3d::Zero();
  GripperCmd gripper = GripperCmd::kOpen;
  Eigen::VectorXd next_observation;
};

struct Trajectory {
  Eigen::VectorXd initial_observation;
  std::vector<Transition> steps;
};

struct DatasetMetadata {
  TaskKind task = TaskKind::kPickAndDrop;
  uint64_t seed = 0;
  CollectionKind kind = CollectionKind::kDemo;
};

// Ordered trajectories; next_observation of step t equals observation of
// step t + 1 within each trajectory.
struct Dataset {
  DatasetMetadata metadata;
  std::vector<Trajectory> trajectories;

  size_t StepCount() const;
};

struct CollectReport {
  int failed_trajectories = 0;
};

// Rolls out the scripted expert to success or the step cap. Throws
// CollectionError if more than 10% of trajectories fail.
Dataset CollectDemos(int n_traj, TaskKind task, double noise_std,
                     uint64_t seed, const EnvConfig& config = {},
                     CollectReport* report = nullptr);

// Task-agnostic coverage data for the encoder: low-pass filtered random
// velocities steered toward unvisited cells of an 8x8x4 workspace grid, with
// periodic scripted grasp-and-carry segments.
Dataset CollectExplore(int n_traj, int steps_per_traj, uint64_t seed,
                       const EnvConfig& config = {});

// Pairs each observation with the following step's action and gripper
// command; drops the last step of every trajectory.
Dataset ShiftActions(const Dataset& dataset);

// Index of the 8x8x4 occupancy cell containing p.
int OccupancyCell(const Eigen::Vector3d& p, const EnvConfig& config = {});
inline constexpr int kOccupancyCells = 8 * 8 * 4;

bool ChainConsistent(const Dataset& dataset);

// JSON Lines: metadata record, then one record per trajectory.
void WriteDataset(const Dataset& dataset, std::ostream& out);
Dataset ReadDataset(std::istream& in);
void SaveDataset(const Dataset& dataset, const std::string& path);
Dataset LoadDataset(const std::string& path);

}  // namespace oodr

#endif  // OODR_DATASET_H_
