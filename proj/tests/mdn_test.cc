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

#include "oodr/mdn.h"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oodr/errors.h"
#include "test_util.h"

namespace oodr {
namespace {

constexpr int kCond = 5;

MdnModel SmallMdn(uint64_t seed, int components, bool decoder) {
  MdnConfig config;
  config.components = components;
  config.hidden = {6};
  config.sigma_floor = kSigmaFloor;
  config.reconstruction = decoder;
  config.reconstruction_weight = 0.7;
  MdnModel m = InitMdn(kCond, config, seed);
  // keep the emitted scales O(1); He-scaled heads give needle components
  m.heads.weights[0] *= 0.3;
  // spread the head outputs so the mixture is not trivially symmetric
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto& v : m.heads.biases[0].reshaped()) v = n(rng);
  for (auto& v : m.trunk.biases[0].reshaped()) v = n(rng);
  return m;
}

MdnBatch RandomBatch(int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  MdnBatch b{Eigen::MatrixXd(kCond, cols), Eigen::MatrixXd(3, cols)};
  for (auto& v : b.conditions.reshaped()) v = n(rng);
  for (auto& v : b.latents.reshaped()) v = n(rng);
  return b;
}

// loss as a function of one sub-network's flattened parameters
double LossWith(MdnModel m, MlpModel MdnModel::*part, const Eigen::VectorXd& p,
                const MdnBatch& b) {
  SetParameters(m.*part, p);
  return MdnNll(m, b).loss;
}

void ExpectGradientsMatch(const MdnModel& m, const MdnBatch& b) {
  const MdnLoss l = MdnNll(m, b);
  struct Part {
    MlpModel MdnModel::*net;
    const ParamGradients* grad;
  };
  std::vector<Part> parts = {{&MdnModel::trunk, &l.gradients.trunk},
                             {&MdnModel::heads, &l.gradients.heads}};
  if (m.HasDecoder()) parts.push_back({&MdnModel::decoder, &l.gradients.decoder});
  for (const Part& part : parts) {
    const Eigen::VectorXd fd = testing::CentralDifference(
        [&](const Eigen::VectorXd& p) { return LossWith(m, part.net, p, b); },
        FlattenParameters(m.*part.net));
    EXPECT_LT(testing::MaxRelativeError(FlattenGradients(*part.grad), fd), 1e-4);
  }
}

bool NearKink(const MdnModel& m, const MdnBatch& b) {
  return testing::MinAbsPreactivation(m.trunk, b.conditions, true) < 1e-3 ||
         testing::LogScaleFloorMargin(m, b.conditions) < 1e-2;
}

TEST(MdnForward, WeightsNormalisedAndScalesFloored) {
  std::mt19937_64 rng(1);
  MdnModel m = SmallMdn(3, 4, false);
  m.heads.biases[0].tail(12).setConstant(-20.0);  // log-scales far below floor
  const MixtureParams mix = MdnForward(m, RandomBatch(1, rng).conditions.col(0));
  EXPECT_NEAR(mix.weights.sum(), 1.0, 1e-14);
  EXPECT_TRUE((mix.weights.array() > 0.0).all());
  EXPECT_TRUE((mix.scales.array() >= kSigmaFloor).all());
  EXPECT_EQ(mix.scales.minCoeff(), kSigmaFloor);
}

TEST(MdnForward, ZeroHeadsGiveUniformStandardComponents) {
  MdnModel m = SmallMdn(3, 5, false);
  SetParameters(m.heads, Eigen::VectorXd::Zero(m.heads.ParameterCount()));
  const MixtureParams mix = MdnForward(m, Eigen::VectorXd::Ones(kCond));
  EXPECT_TRUE(mix.weights.isApprox(Eigen::VectorXd::Constant(5, 0.2), 1e-15));
  EXPECT_TRUE(mix.means.isZero(0.0));
  EXPECT_TRUE(mix.scales.isOnes(0.0));
}

TEST(MdnForward, WrongConditionSizeIsShapeError) {
  EXPECT_THROW(MdnForward(SmallMdn(1, 2, false), Eigen::VectorXd::Zero(3)),
               ShapeError);
}

TEST(MdnNll, StandardNormalAtOrigin) {
  MdnModel m = SmallMdn(3, 1, false);
  SetParameters(m.heads, Eigen::VectorXd::Zero(m.heads.ParameterCount()));
  std::mt19937_64 rng(2);
  MdnBatch b = RandomBatch(4, rng);
  b.latents.setZero();
  EXPECT_NEAR(MdnNll(m, b).nll, 1.5 * std::log(2.0 * std::numbers::pi), 1e-12);
}

TEST(MdnNll, AgreesWithMixtureLogDensity) {
  std::mt19937_64 rng(3);
  const MdnModel m = SmallMdn(4, 3, false);
  const MdnBatch b = RandomBatch(5, rng);
  double want = 0.0;
  for (int c = 0; c < 5; ++c) {
    want -= GmmLogDensity(MdnForward(m, b.conditions.col(c)), b.latents.col(c));
  }
  EXPECT_NEAR(MdnNll(m, b).nll, want / 5.0, 1e-12);
}

TEST(MdnNll, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  int checked = 0;
  while (checked < 20) {
    const MdnModel m = SmallMdn(rng(), 1 + checked % 4, false);
    const MdnBatch b = RandomBatch(3, rng);
    if (NearKink(m, b)) continue;
    ExpectGradientsMatch(m, b);
    ++checked;
  }
}

TEST(MdnNll, DecoderGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  int checked = 0;
  while (checked < 10) {
    const MdnModel m = SmallMdn(rng(), 3, true);
    const MdnBatch b = RandomBatch(3, rng);
    if (NearKink(m, b)) continue;
    ASSERT_TRUE(m.HasDecoder());
    ExpectGradientsMatch(m, b);
    EXPECT_GT(MdnNll(m, b).loss, MdnNll(m, b).nll);
    ++checked;
  }
}

TEST(MdnNll, DuplicatingTheBatchChangesNothing) {
  std::mt19937_64 rng(6);
  const MdnModel m = SmallMdn(6, 3, true);
  const MdnBatch b = RandomBatch(4, rng);
  MdnBatch twice{Eigen::MatrixXd(kCond, 8), Eigen::MatrixXd(3, 8)};
  twice.conditions << b.conditions, b.conditions;
  twice.latents << b.latents, b.latents;
  const MdnLoss one = MdnNll(m, b), two = MdnNll(m, twice);
  EXPECT_NEAR(one.loss, two.loss, 1e-12);
  EXPECT_TRUE(FlattenGradients(one.gradients.trunk)
                  .isApprox(FlattenGradients(two.gradients.trunk), 1e-12));
  EXPECT_TRUE(FlattenGradients(one.gradients.heads)
                  .isApprox(FlattenGradients(two.gradients.heads), 1e-12));
}

TEST(MdnNll, EmptyBatchIsInputError) {
  MdnBatch b{Eigen::MatrixXd(kCond, 0), Eigen::MatrixXd(3, 0)};
  EXPECT_THROW(MdnNll(SmallMdn(1, 2, false), b), InputError);
}

TEST(InitMdn, RejectsBadConfig) {
  MdnConfig config;
  config.components = 0;
  EXPECT_THROW(InitMdn(kCond, config, 1), ConfigError);
  config.components = 2;
  config.hidden.clear();
  EXPECT_THROW(InitMdn(kCond, config, 1), ConfigError);
}

TEST(MakeCondition, AppendsGripperBit) {
  const Eigen::VectorXd c = MakeCondition(Eigen::Vector2d(0.5, 0.25), true);
  EXPECT_EQ(c, Eigen::Vector3d(0.5, 0.25, 1.0));
  EXPECT_TRUE(ObservationGripperClosed(c));
  EXPECT_FALSE(ObservationGripperClosed(MakeCondition(c, false)));
}

class TinyTraining : public ::testing::Test {
 protected:
  static MdnModel Train(uint64_t seed) {
    static const Dataset demos =
        CollectDemos(4, TaskKind::kPickAndDrop, 0.005, 1);
    static const EncoderModel encoder = [] {
      EncoderModel e;
      const int sizes[] = {EnvConfig{}.ObservationSize(), 8, 3};
      e.net = InitModel(sizes, 2);
      return e;
    }();
    MdnConfig config;
    config.hidden = {8};
    config.components = 2;
    config.epochs = 3;
    config.learning_rate = 1e-3;
    return TrainMdn(demos, encoder, config, seed, &demos);
  }
};

TEST_F(TinyTraining, DeterministicAndCalibrated) {
  const MdnModel a = Train(9), b = Train(9);
  EXPECT_EQ(FlattenParameters(a.trunk), FlattenParameters(b.trunk));
  EXPECT_EQ(FlattenParameters(a.heads), FlattenParameters(b.heads));
  EXPECT_EQ(a.gate.epsilon, b.gate.epsilon);
  EXPECT_EQ(a.report.epoch_nll.size(), 3u);
  EXPECT_EQ(a.report.heldout_nll.size(), 3u);
  EXPECT_LT(a.report.epoch_nll.back(), a.report.initial_train_nll);
  EXPECT_GT(a.gate.temperature, 0.0);
}

TEST_F(TinyTraining, JsonRoundTrip) {
  const MdnModel m = Train(10);
  const std::string path = ::testing::TempDir() + "/mdn_roundtrip.json";
  SaveMdn(m, path);
  const MdnModel back = LoadMdn(path);
  std::remove(path.c_str());
  EXPECT_EQ(FlattenParameters(back.trunk), FlattenParameters(m.trunk));
  EXPECT_EQ(FlattenParameters(back.heads), FlattenParameters(m.heads));
  EXPECT_EQ(back.gate.epsilon, m.gate.epsilon);
  EXPECT_EQ(back.gate.temperature, m.gate.temperature);
  EXPECT_EQ(back.components, m.components);
  const Eigen::VectorXd cond = Eigen::VectorXd::Ones(m.ConditionSize());
  EXPECT_EQ(MdnForward(back, cond).means, MdnForward(m, cond).means);
}

TEST(LoadMdn, GarbageIsFormatError) {
  EXPECT_THROW(MdnFromJson(nlohmann::json{{"trunk", 1}}), FormatError);
}

}  // namespace
}  // namespace oodr
