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

#ifndef OODR_ENV_H_
#define OODR_ENV_H_

#include <random>
#include <string>

#include <Eigen/Dense>

namespace oodr {

using Rng = std::mt19937_64;

enum class TaskKind { kPickAndDrop, kPush };
enum class GripperCmd { kOpen, kClose };

std::string ToString(TaskKind task);
TaskKind TaskKindFromString(const std::string& s);
std::string ToString(GripperCmd cmd);
GripperCmd GripperCmdFromString(const std::string& s);

// Table-top geometry and thresholds, in table units.
struct EnvConfig {
  int grid = 16;               // K, observation image is K x K x 3
  double step_clip = 0.05;     // per-coordinate action limit
  double grasp_radius = 0.03;
  double contact_radius = 0.04;
  double target_radius = 0.05;
  double lift_height = 0.15;
  double max_height = 0.5;
  int max_steps = 200;

  int ObservationSize() const { return 3 * grid * grid + 2; }
};

struct EnvState {
  Eigen::Vector3d gripper_pos = Eigen::Vector3d::Zero();
  Eigen::Vector3d object_pos = Eigen::Vector3d::Zero();
  Eigen::Vector3d target_pos = Eigen::Vector3d::Zero();
  bool attached = false;
  bool gripper_closed = false;
  TaskKind task = TaskKind::kPickAndDrop;
};

struct Action {
  Eigen::Vector3d delta = Eigen::Vector3d::Zero();
  GripperCmd gripper = GripperCmd::kOpen;
};

struct SuccessFlags {
  bool grasped = false;
  bool completed = false;
};

// Initial gripper position shared by every episode.
Eigen::Vector3d HomePosition();
Eigen::Vector3d TargetPosition();

bool InWorkspace(const Eigen::Vector3d& p, const EnvConfig& config);
Eigen::Vector3d ClipToWorkspace(const Eigen::Vector3d& p,
                                const EnvConfig& config);
Eigen::Vector3d ClipDelta(const Eigen::Vector3d& delta,
                          const EnvConfig& config);

// Object uniform over the first half of the table, gripper at home.
EnvState Reset(Rng& rng, TaskKind task, const EnvConfig& config = {});

// Applies one action; throws InputError for non-finite deltas.
EnvState Step(const EnvState& state, const Action& action,
              const EnvConfig& config = {});

// Gaussian-blob top-down image (HWC layout, channels gripper, object,
// target) followed by [gripper height, gripper closed bit].
Eigen::VectorXd Render(const EnvState& state, const EnvConfig& config = {});

// `grasped` reports the current attachment; callers track it per episode.
SuccessFlags EvaluateSuccess(const EnvState& state,
                             const EnvConfig& config = {});

// Waypoint-following expert with Gaussian action noise.
Action ScriptedExpert(const EnvState& state, double noise_std, Rng& rng,
                      const EnvConfig& config = {});

// Teleports the gripper by `magnitude` along a uniformly random direction.
EnvState Perturb(const EnvState& state, double magnitude, Rng& rng,
                 const EnvConfig& config = {});

}  // namespace oodr

#endif  // OODR_ENV_H_
