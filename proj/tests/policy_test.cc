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

#include "oodr/policy.h"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oodr/errors.h"
#include "test_util.h"

namespace oodr {
namespace {

// Toy world: observation = (x, y, z, gripper bit) and the encoder reads the
// position straight through, so latent steps are gripper steps.
EncoderModel IdentityEncoder() {
  EncoderModel e;
  e.net = InitModel(std::vector<int>{4, 3}, 1);
  e.net.weights[0].setZero();
  e.net.weights[0].leftCols<3>().setIdentity();
  e.net.biases[0].setZero();
  return e;
}

Eigen::VectorXd Obs(const Eigen::Vector3d& p, bool closed) {
  Eigen::VectorXd o(4);
  o << p, closed ? 1.0 : 0.0;
  return o;
}

// Policy with zero weights whose output is exactly `bias`.
BcPolicy ConstantPolicy(const Eigen::Vector4d& bias) {
  BcPolicy p;
  p.net = InitModel(std::vector<int>{4, 4}, 1);
  p.net.weights[0].setZero();
  p.net.biases[0] = bias;
  return p;
}

// MDN whose mixture ignores the condition: zero head weights, biases carry
// [logits, means, log-scales].
MdnModel FixedMdn(const MixtureParams& mix) {
  MdnConfig config;
  config.components = mix.Components();
  config.hidden = {2};
  MdnModel m = InitMdn(5, config, 1);
  m.heads.weights[0].setZero();
  Eigen::VectorXd& b = m.heads.biases[0];
  const int n = mix.Components();
  b.head(n) = mix.weights.array().log();
  for (int i = 0; i < n; ++i) {
    b.segment(n + 3 * i, 3) = mix.means.row(i).transpose();
    b.segment(4 * n + 3 * i, 3) = mix.scales.row(i).array().log().transpose();
  }
  return m;
}

// standard normal along x; the y/z factors integrate to one and equal one
// at the mean, so the 3-D density at (x, 0, 0) is the 1-D pdf
MixtureParams UnitPeakNormal() {
  MixtureParams mix;
  mix.weights = Eigen::VectorXd::Ones(1);
  mix.means = Eigen::MatrixXd::Zero(1, 3);
  const double s = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  mix.scales.resize(1, 3);
  mix.scales << 1.0, s, s;
  return mix;
}

TEST(BcAct, GripperThreshold) {
  EXPECT_EQ(BcAct(ConstantPolicy({0, 0, 0, 0.6}), Obs({0, 0, 0}, false)).gripper,
            GripperCmd::kClose);
  EXPECT_EQ(BcAct(ConstantPolicy({0, 0, 0, 0.4}), Obs({0, 0, 0}, true)).gripper,
            GripperCmd::kOpen);
}

TEST(BcAct, ClipsTranslation) {
  // network units are multiples of the 0.05 action scale: 4 -> 0.2
  const Action a = BcAct(ConstantPolicy({4.0, 0, 0, 0}), Obs({0, 0, 0}, false));
  EXPECT_EQ(a.delta, Eigen::Vector3d(0.05, 0.0, 0.0));
  EXPECT_NEAR(BcRawOutput(ConstantPolicy({4.0, 0, 0, 0}), Obs({0, 0, 0}, false))[0],
              0.2, 1e-15);
}

TEST(BcAct, ShapeMismatchAndNonFinite) {
  EXPECT_THROW(BcAct(ConstantPolicy({0, 0, 0, 0}), Eigen::VectorXd::Zero(3)),
               ShapeError);
  EXPECT_THROW(BcAct(ConstantPolicy({NAN, 0, 0, 0}), Obs({0, 0, 0}, false)),
               NumericError);
}

Dataset RepeatedPoint(const Eigen::VectorXd& obs, const Eigen::Vector3d& a,
                      int copies) {
  Dataset d;
  Trajectory traj;
  traj.initial_observation = obs;
  for (int i = 0; i < copies; ++i) {
    traj.steps.push_back({obs, a, GripperCmd::kClose, obs});
  }
  d.trajectories.push_back(traj);
  return d;
}

TEST(TrainBc, OverfitsASinglePoint) {
  const Eigen::VectorXd obs = Obs({0.3, 0.6, 0.1}, false);
  const Eigen::Vector3d a(0.03, -0.02, 0.01);
  BcTrainConfig config;
  config.hidden = {16};
  config.learning_rate = 1e-3;
  config.epochs = 400;
  const BcPolicy p = TrainBc(RepeatedPoint(obs, a, 32), config, 3);
  const Eigen::Vector4d raw = BcRawOutput(p, obs);
  EXPECT_LT((raw.head<3>() - a).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_NEAR(raw[3], 1.0, 1e-3);
  EXPECT_EQ(BcAct(p, obs).gripper, GripperCmd::kClose);
  // fixed seed, identical model
  const BcPolicy again = TrainBc(RepeatedPoint(obs, a, 32), config, 3);
  EXPECT_EQ(FlattenParameters(again.net), FlattenParameters(p.net));
}

TEST(TrainBc, BeatsTheMeanActionOnHeldOutDemos) {
  const Dataset train = CollectDemos(30, TaskKind::kPickAndDrop, 0.005, 21);
  const Dataset test = CollectDemos(8, TaskKind::kPickAndDrop, 0.005, 22);
  BcTrainConfig config;
  config.hidden = {64, 32};
  config.learning_rate = 1e-3;
  config.epochs = 30;
  const BcPolicy p = TrainBc(train, config, 4);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& t : train.trajectories) for (const auto& s : t.steps) mean += s.action;
  mean /= static_cast<double>(train.StepCount());
  double baseline = 0.0;
  for (const auto& t : test.trajectories) {
    for (const auto& s : t.steps) baseline += (s.action - mean).squaredNorm();
  }
  baseline /= static_cast<double>(test.StepCount());
  EXPECT_LT(BcActionMse(p, test), baseline);
  EXPECT_LT(p.report.epoch_loss.back(), p.report.initial_loss);
}

TEST(TrainBc, EmptyDatasetIsInputError) {
  EXPECT_THROW(TrainBc(Dataset{}, {}, 1), InputError);
}

TEST(RecoveryAct, OneDimensionalAnalog) {
  const EncoderModel e = IdentityEncoder();
  const GateConfig gate{2.0, 0.5, 0.05};
  const RecoveryStep r =
      RecoveryAct(e, UnitPeakNormal(), Obs({1.0, 0.0, 0.0}, false), gate);
  EXPECT_NEAR(r.density, 0.2419707245, 1e-10);
  EXPECT_NEAR(r.action.delta.x(), -0.0120985, 1e-7);
  EXPECT_NEAR(r.action.delta.y(), 0.0, 1e-15);
  EXPECT_EQ(r.halvings, 0);
  EXPECT_FALSE(r.rejected);
  EXPECT_GE(r.predicted_density, r.density);
}

TEST(RecoveryAct, ZeroTranslationAtTheMean) {
  const RecoveryStep r = RecoveryAct(IdentityEncoder(), UnitPeakNormal(),
                                     Obs({0, 0, 0}, true), GateConfig{});
  EXPECT_TRUE(r.action.delta.isZero(0.0));
  EXPECT_EQ(r.action.gripper, GripperCmd::kClose);
}

TEST(RecoveryAct, HalvesOvershootingSteps) {
  // a narrow component: eta * grad jumps past the peak
  MixtureParams mix;
  mix.weights = Eigen::VectorXd::Ones(1);
  mix.means = Eigen::MatrixXd::Zero(1, 3);
  mix.scales = Eigen::MatrixXd::Constant(1, 3, 0.01);
  const RecoveryStep r = RecoveryAct(IdentityEncoder(), mix,
                                     Obs({0.012, 0.0, 0.0}, false),
                                     GateConfig{});
  EXPECT_GT(r.halvings, 0);
  EXPECT_GE(r.predicted_density, r.density);
  EXPECT_NEAR(GmmDensity(mix, r.latent + r.action.delta), r.predicted_density,
              1e-9 * r.predicted_density);
}

TEST(RecoveryAct, ShapeMismatchIsShapeError) {
  EXPECT_THROW(RecoveryAct(IdentityEncoder(), UnitPeakNormal(),
                           Eigen::VectorXd::Zero(6), GateConfig{}),
               ShapeError);
}

TEST(BlendActions, HalfGateAveragesTranslation) {
  const Action bc{{0.04, 0, 0}, GripperCmd::kClose};
  const Action rec{{0, 0.04, 0}, GripperCmd::kOpen};
  const Action a = BlendActions(bc, rec, 0.5);
  EXPECT_TRUE(a.delta.isApprox(Eigen::Vector3d(0.02, 0.02, 0.0), 1e-15));
  EXPECT_EQ(a.gripper, GripperCmd::kClose);
  EXPECT_EQ(BlendActions(bc, rec, 0.49).gripper, GripperCmd::kOpen);
}

TEST(BlendActions, ComponentsStayBetweenSources) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.05, 0.05), g(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Action bc{{u(rng), u(rng), u(rng)}, GripperCmd::kOpen};
    const Action rec{{u(rng), u(rng), u(rng)}, GripperCmd::kOpen};
    const Action a = BlendActions(bc, rec, g(rng));
    for (int d = 0; d < 3; ++d) {
      EXPECT_GE(a.delta[d], std::min(bc.delta[d], rec.delta[d]) - 1e-17);
      EXPECT_LE(a.delta[d], std::max(bc.delta[d], rec.delta[d]) + 1e-17);
    }
  }
}

TEST(AugmentedPolicy, GateEndpointsSelectTheSource) {
  const EncoderModel e = IdentityEncoder();
  const MdnModel mdn = FixedMdn(UnitPeakNormal());
  const BcPolicy bc = ConstantPolicy({0.2, -0.4, 0.6, 1.0});
  const Eigen::Vector3d z(1.0, 0.0, 0.0);
  const double rho = GmmDensity(UnitPeakNormal(), z);
  const double tau = 0.01;
  for (double side : {+1.0, -1.0}) {
    // place -epsilon so the density sits 10 temperatures above or below it
    const GateConfig gate{-(rho - side * 10.0 * tau), tau, 0.05};
    const AugmentedPolicy policy(&bc, &e, &mdn, gate, Obs(z, false));
    const CombinedStep s = policy.Act(Obs(z, false));
    const Eigen::Vector3d want = side > 0 ? s.bc_delta : s.recovery_delta;
    EXPECT_LT((s.action.delta - want).cwiseAbs().maxCoeff(), 1e-4);
    EXPECT_NEAR(s.density, rho, 1e-12);
  }
}

// Pure recovery from random starts: density never drops and the gripper
// never changes.
TEST(AugmentedPolicy, RecoveryRolloutsAreMonotoneAndHoldTheGripper) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const EncoderModel e = IdentityEncoder();
  const BcPolicy bc = ConstantPolicy({0, 0, 0, 0});
  for (int trial = 0; trial < 100; ++trial) {
    MixtureParams mix = testing::RandomMixture(1 + trial % 4, 3, rng, 0.05, 0.3);
    mix.means *= 0.3;
    const MdnModel mdn = FixedMdn(mix);
    const bool closed = coin(rng);
    Eigen::Vector3d p(0.3 * n(rng), 0.3 * n(rng), 0.3 * n(rng));
    const AugmentedPolicy policy(&bc, &e, &mdn, mdn.gate, Obs(p, closed));
    double prev = -1.0;
    for (int t = 0; t < 40; ++t) {
      const RecoveryStep r = policy.Recover(Obs(p, closed));
      EXPECT_GE(r.density, prev) << "trial " << trial << " step " << t;
      EXPECT_EQ(r.action.gripper,
                closed ? GripperCmd::kClose : GripperCmd::kOpen);
      prev = r.density;
      p += r.action.delta;
    }
  }
}

TEST(AugmentedPolicy, InvalidGateIsConfigError) {
  const EncoderModel e = IdentityEncoder();
  const MdnModel mdn = FixedMdn(UnitPeakNormal());
  const BcPolicy bc = ConstantPolicy({0, 0, 0, 0});
  EXPECT_THROW(AugmentedPolicy(&bc, &e, &mdn, GateConfig{0.0, 0.0, 0.05},
                               Obs({0, 0, 0}, false)),
               ConfigError);
}

TEST(BcJson, RoundTrip) {
  BcPolicy p = ConstantPolicy({0.1, 0.2, 0.3, 0.4});
  p.net = InitModel(std::vector<int>{4, 5, 4}, 3);
  const BcPolicy back = BcFromJson(BcToJson(p));
  EXPECT_EQ(FlattenParameters(back.net), FlattenParameters(p.net));
  EXPECT_EQ(back.config.action_scale, p.config.action_scale);
}

}  // namespace
}  // namespace oodr
