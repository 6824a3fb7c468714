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

#include <array>
#include <sstream>

#include <gtest/gtest.h>

#include "oodr/errors.h"

namespace oodr {
namespace {

std::string Serialize(const Dataset& d) {
  std::ostringstream out;
  WriteDataset(d, out);
  return out.str();
}

TEST(CollectDemos, ChainsObservations) {
  const Dataset d = CollectDemos(5, TaskKind::kPickAndDrop, 0.005, 3);
  ASSERT_EQ(d.trajectories.size(), 5u);
  EXPECT_TRUE(ChainConsistent(d));
  for (const auto& traj : d.trajectories) {
    EXPECT_FALSE(traj.steps.empty());
    for (const auto& s : traj.steps) {
      EXPECT_LE(s.action.cwiseAbs().maxCoeff(), 0.05);
    }
  }
}

TEST(CollectDemos, SameSeedSameBytes) {
  const Dataset a = CollectDemos(4, TaskKind::kPush, 0.005, 9);
  const Dataset b = CollectDemos(4, TaskKind::kPush, 0.005, 9);
  EXPECT_EQ(Serialize(a), Serialize(b));
  const Dataset c = CollectDemos(4, TaskKind::kPush, 0.005, 10);
  EXPECT_NE(Serialize(a), Serialize(c));
}

TEST(CollectDemos, ReportsNoFailuresForTheExpert) {
  CollectReport report;
  CollectDemos(20, TaskKind::kPickAndDrop, 0.005, 1, {}, &report);
  EXPECT_EQ(report.failed_trajectories, 0);
}

TEST(CollectDemos, ImpossibleBudgetIsCollectionError) {
  EnvConfig config;
  config.max_steps = 3;
  EXPECT_THROW(CollectDemos(5, TaskKind::kPickAndDrop, 0.0, 1, config),
               CollectionError);
}

TEST(Serialization, RoundTripIsByteIdentical) {
  const Dataset d = CollectDemos(3, TaskKind::kPickAndDrop, 0.005, 5);
  const std::string bytes = Serialize(d);
  std::istringstream in(bytes);
  const Dataset back = ReadDataset(in);
  EXPECT_EQ(Serialize(back), bytes);
  EXPECT_EQ(back.metadata.seed, 5u);
  EXPECT_EQ(back.StepCount(), d.StepCount());
  EXPECT_EQ(back.trajectories[1].steps[2].observation,
            d.trajectories[1].steps[2].observation);
}

TEST(Serialization, TruncatedInputIsFormatError) {
  const std::string bytes =
      Serialize(CollectDemos(1, TaskKind::kPickAndDrop, 0.0, 5));
  std::istringstream in(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(ReadDataset(in), FormatError);
}

TEST(ShiftActions, PairsObservationWithNextAction) {
  Dataset d;
  Trajectory traj;
  traj.initial_observation = Eigen::VectorXd::Constant(1, 0.0);
  for (int t = 0; t < 3; ++t) {
    Transition s;
    s.observation = Eigen::VectorXd::Constant(1, t);
    s.next_observation = Eigen::VectorXd::Constant(1, t + 1);
    s.action = Eigen::Vector3d::Constant(0.01 * (t + 1));
    s.gripper = t == 2 ? GripperCmd::kClose : GripperCmd::kOpen;
    traj.steps.push_back(s);
  }
  d.trajectories.push_back(traj);
  const Dataset shifted = ShiftActions(d);
  ASSERT_EQ(shifted.trajectories[0].steps.size(), 2u);
  const auto& s = shifted.trajectories[0].steps;
  EXPECT_EQ(s[0].observation[0], 0.0);
  EXPECT_EQ(s[0].action, Eigen::Vector3d::Constant(0.02));
  EXPECT_EQ(s[1].observation[0], 1.0);
  EXPECT_EQ(s[1].action, Eigen::Vector3d::Constant(0.03));
  EXPECT_EQ(s[1].gripper, GripperCmd::kClose);
  EXPECT_TRUE(ChainConsistent(shifted));
}

TEST(ShiftActions, DropsOneStepPerTrajectory) {
  const Dataset d = CollectDemos(6, TaskKind::kPickAndDrop, 0.005, 2);
  EXPECT_EQ(ShiftActions(d).StepCount(), d.StepCount() - 6);
}

TEST(ShiftActions, ShortTrajectoryIsInputError) {
  Dataset d;
  Trajectory traj;
  traj.steps.resize(1);
  d.trajectories.push_back(traj);
  EXPECT_THROW(ShiftActions(d), InputError);
}

TEST(CollectExplore, CoversTheWorkspace) {
  const EnvConfig config;
  const Dataset d = CollectExplore(6, 290, 11, config);
  EXPECT_EQ(d.StepCount(), 6u * 290u);
  EXPECT_TRUE(ChainConsistent(d));
  std::array<int, kOccupancyCells> visits{};
  for (const auto& traj : d.trajectories) {
    // recorded deltas are the exact displacements, so integrating them from
    // home recovers the gripper path
    Eigen::Vector3d p = HomePosition();
    ++visits[OccupancyCell(p, config)];
    for (const auto& s : traj.steps) {
      EXPECT_LE(s.action.cwiseAbs().maxCoeff(), config.step_clip + 1e-15);
      p += s.action;
      ++visits[OccupancyCell(p, config)];
      EXPECT_NEAR(s.next_observation[3 * config.grid * config.grid], p.z(),
                  1e-9);
    }
  }
  int covered = 0;
  for (int v : visits) covered += v > 0;
  EXPECT_EQ(covered, kOccupancyCells);
}

TEST(OccupancyCell, CornersAndClamping) {
  EXPECT_EQ(OccupancyCell({0.0, 0.0, 0.0}), 0);
  EXPECT_EQ(OccupancyCell({1.0, 1.0, 0.5}), kOccupancyCells - 1);
  EXPECT_EQ(OccupancyCell({0.126, 0.0, 0.0}), 1);
  EXPECT_EQ(OccupancyCell({0.0, 0.126, 0.0}), 8);
  EXPECT_EQ(OccupancyCell({0.0, 0.0, 0.126}), 64);
}

}  // namespace
}  // namespace oodr
