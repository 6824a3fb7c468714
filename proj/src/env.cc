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

#include "oodr/env.h"

#include <algorithm>
#include <cmath>

#include "oodr/errors.h"

namespace oodr {
namespace {

// expert switching tolerances
constexpr double kAlignTolerance = 0.015;
constexpr double kCloseDistance = 0.02;
constexpr double kReleaseDistance = 0.02;
constexpr double kPushOffset = 0.035;
constexpr double kPushHover = 0.1;

double PlanarDistance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return (a.head<2>() - b.head<2>()).norm();
}

// move toward `to` with every coordinate clipped independently
Eigen::Vector3d Toward(const Eigen::Vector3d& from, const Eigen::Vector3d& to,
                       const EnvConfig& config) {
  return ClipDelta(to - from, config);
}

// Straight-line variant for pushing: per-coordinate clipping would bend the
// stroke and slide the tip off the object.
Eigen::Vector3d Straight(const Eigen::Vector3d& from,
                         const Eigen::Vector3d& to, const EnvConfig& config) {
  const Eigen::Vector3d d = to - from;
  const double largest = d.cwiseAbs().maxCoeff();
  if (largest <= config.step_clip) return d;
  return d * (config.step_clip / largest);
}

Action PickExpert(const EnvState& s, const EnvConfig& config) {
  const double lift = config.lift_height;
  Action a;
  if (s.attached) {
    a.gripper = GripperCmd::kClose;
    const Eigen::Vector3d above_target(s.target_pos.x(), s.target_pos.y(),
                                       lift);
    if (PlanarDistance(s.gripper_pos, s.target_pos) <= kReleaseDistance) {
      a.gripper = GripperCmd::kOpen;
    } else if (s.gripper_pos.z() < lift - kAlignTolerance) {
      const Eigen::Vector3d up(s.gripper_pos.x(), s.gripper_pos.y(), lift);
      a.delta = Toward(s.gripper_pos, up, config);
    } else {
      a.delta = Toward(s.gripper_pos, above_target, config);
    }
    return a;
  }
  a.gripper = GripperCmd::kOpen;
  if (s.gripper_closed) return a;  // missed grasp: release and retry
  if (PlanarDistance(s.object_pos, s.target_pos) <= config.target_radius) {
    return a;  // done
  }
  const Eigen::Vector3d above_object(s.object_pos.x(), s.object_pos.y(),
                                     lift);
  if (PlanarDistance(s.gripper_pos, s.object_pos) > kAlignTolerance &&
      s.gripper_pos.z() > kCloseDistance) {
    a.delta = Toward(s.gripper_pos, above_object, config);
  } else if ((s.gripper_pos - s.object_pos).norm() > kCloseDistance) {
    if (PlanarDistance(s.gripper_pos, s.object_pos) > kAlignTolerance) {
      // too low and misaligned: rise back to the approach height
      a.delta = Toward(s.gripper_pos, above_object, config);
    } else {
      a.delta = Toward(s.gripper_pos, s.object_pos, config);
    }
  } else {
    a.gripper = GripperCmd::kClose;
  }
  return a;
}

Action PushExpert(const EnvState& s, const EnvConfig& config) {
  Action a;
  a.gripper = GripperCmd::kClose;
  Eigen::Vector3d to_target = s.target_pos - s.object_pos;
  to_target.z() = 0.0;
  const double remaining = to_target.norm();
  if (remaining <= kReleaseDistance) return a;
  const Eigen::Vector3d u = to_target / remaining;
  const Eigen::Vector3d behind = s.object_pos - kPushOffset * u;
  const Eigen::Vector3d rel = s.object_pos - s.gripper_pos;
  const bool in_contact = rel.norm() < config.contact_radius &&
                          s.gripper_pos.z() <= kAlignTolerance &&
                          rel.head<2>().dot(u.head<2>()) > 0.0;
  if (in_contact) {
    const Eigen::Vector3d goal = s.target_pos - kPushOffset * u;
    a.delta = Straight(s.gripper_pos, goal, config);
  } else if (PlanarDistance(s.gripper_pos, behind) > kAlignTolerance) {
    const Eigen::Vector3d hover(behind.x(), behind.y(), kPushHover);
    a.delta = Toward(s.gripper_pos, hover, config);
  } else {
    a.delta = Toward(s.gripper_pos, behind, config);
  }
  return a;
}

}  // namespace

std::string ToString(TaskKind task) {
  return task == TaskKind::kPush ? "push" : "pick_and_drop";
}

TaskKind TaskKindFromString(const std::string& s) {
  if (s == "pick_and_drop") return TaskKind::kPickAndDrop;
  if (s == "push") return TaskKind::kPush;
  throw ConfigError("unknown task kind '" + s + "'");
}

std::string ToString(GripperCmd cmd) {
  return cmd == GripperCmd::kClose ? "close" : "open";
}

GripperCmd GripperCmdFromString(const std::string& s) {
  if (s == "open") return GripperCmd::kOpen;
  if (s == "close") return GripperCmd::kClose;
  throw FormatError("unknown gripper command '" + s + "'");
}

Eigen::Vector3d HomePosition() { return {0.25, 0.5, 0.3}; }
Eigen::Vector3d TargetPosition() { return {0.75, 0.5, 0.0}; }

bool InWorkspace(const Eigen::Vector3d& p, const EnvConfig& config) {
  return p.x() >= 0.0 && p.x() <= 1.0 && p.y() >= 0.0 && p.y() <= 1.0 &&
         p.z() >= 0.0 && p.z() <= config.max_height;
}

Eigen::Vector3d ClipToWorkspace(const Eigen::Vector3d& p,
                                const EnvConfig& config) {
  return {std::clamp(p.x(), 0.0, 1.0), std::clamp(p.y(), 0.0, 1.0),
          std::clamp(p.z(), 0.0, config.max_height)};
}

Eigen::Vector3d ClipDelta(const Eigen::Vector3d& delta,
                          const EnvConfig& config) {
  return delta.cwiseMax(-config.step_clip).cwiseMin(config.step_clip);
}

EnvState Reset(Rng& rng, TaskKind task, const EnvConfig& config) {
  (void)config;
  std::uniform_real_distribution<double> ux(0.05, 0.45);
  std::uniform_real_distribution<double> uy(0.1, 0.9);
  EnvState s;
  s.task = task;
  const double x = ux(rng);
  const double y = uy(rng);
  s.object_pos = {x, y, 0.0};
  s.target_pos = TargetPosition();
  s.gripper_pos = HomePosition();
  s.attached = false;
  s.gripper_closed = task == TaskKind::kPush;
  return s;
}

EnvState Step(const EnvState& state, const Action& action,
              const EnvConfig& config) {
  if (!action.delta.allFinite()) {
    throw InputError("action delta is not finite");
  }
  EnvState next = state;
  const Eigen::Vector3d before = state.gripper_pos;
  next.gripper_pos =
      ClipToWorkspace(before + ClipDelta(action.delta, config), config);
  const Eigen::Vector3d moved = next.gripper_pos - before;

  if (state.task == TaskKind::kPush) {
    next.gripper_closed = true;
    if ((next.gripper_pos - state.object_pos).norm() <
        config.contact_radius) {
      Eigen::Vector3d pushed = state.object_pos;
      pushed.head<2>() += moved.head<2>();
      next.object_pos = ClipToWorkspace(pushed, config);
    }
    return next;
  }

  if (next.attached) next.object_pos = next.gripper_pos;
  if (action.gripper == GripperCmd::kClose) {
    if (!next.attached &&
        (next.gripper_pos - next.object_pos).norm() <= config.grasp_radius) {
      next.attached = true;
      next.object_pos = next.gripper_pos;
    }
    next.gripper_closed = true;
  } else {
    next.gripper_closed = false;
    if (next.attached) {
      next.attached = false;
      next.object_pos.z() = 0.0;
    }
  }
  return next;
}

Eigen::VectorXd Render(const EnvState& state, const EnvConfig& config) {
  const int k = config.grid;
  const double sigma = 1.5 / k;
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  Eigen::VectorXd obs(config.ObservationSize());
  const Eigen::Vector3d* blobs[3] = {&state.gripper_pos, &state.object_pos,
                                     &state.target_pos};
  for (int i = 0; i < k; ++i) {
    const double cy = (i + 0.5) / k;
    for (int j = 0; j < k; ++j) {
      const double cx = (j + 0.5) / k;
      for (int c = 0; c < 3; ++c) {
        const double dx = cx - blobs[c]->x();
        const double dy = cy - blobs[c]->y();
        obs[(i * k + j) * 3 + c] = std::exp(-(dx * dx + dy * dy) * inv_two_var);
      }
    }
  }
  obs[3 * k * k] = state.gripper_pos.z();
  obs[3 * k * k + 1] = state.gripper_closed ? 1.0 : 0.0;
  return obs;
}

SuccessFlags EvaluateSuccess(const EnvState& state, const EnvConfig& config) {
  SuccessFlags flags;
  flags.grasped = state.attached;
  const bool at_target =
      PlanarDistance(state.object_pos, state.target_pos) <=
      config.target_radius;
  if (state.task == TaskKind::kPush) {
    flags.completed = at_target;
  } else {
    flags.completed = at_target && !state.gripper_closed && !state.attached;
  }
  return flags;
}

Action ScriptedExpert(const EnvState& state, double noise_std, Rng& rng,
                      const EnvConfig& config) {
  Action a = state.task == TaskKind::kPush ? PushExpert(state, config)
                                           : PickExpert(state, config);
  if (noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_std);
    for (int d = 0; d < 3; ++d) a.delta[d] += noise(rng);
  }
  a.delta = ClipDelta(a.delta, config);
  return a;
}

EnvState Perturb(const EnvState& state, double magnitude, Rng& rng,
                 const EnvConfig& config) {
  if (!(magnitude >= 0.0) || !std::isfinite(magnitude)) {
    throw InputError("perturbation magnitude must be non-negative");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector3d dir;
  do {
    dir = {normal(rng), normal(rng), normal(rng)};
  } while (dir.norm() < 1e-12);
  dir.normalize();
  EnvState next = state;
  next.gripper_pos =
      ClipToWorkspace(state.gripper_pos + magnitude * dir, config);
  if (next.attached) next.object_pos = next.gripper_pos;
  return next;
}

}  // namespace oodr
