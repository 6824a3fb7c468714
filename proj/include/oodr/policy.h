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

#ifndef OODR_POLICY_H_
#define OODR_POLICY_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oodr/dataset.h"
#include "oodr/encoder.h"
#include "oodr/env.h"
#include "oodr/mdn.h"
#include "oodr/mixture.h"
#include "oodr/mlp.h"

namespace oodr {

struct BcTrainConfig {
  std::vector<int> hidden = {128, 64};
  double learning_rate = 1e-4;
  int batch_size = 32;
  int epochs = 300;
  // translation targets are divided by this before regression
  double action_scale = 0.05;
};

struct BcReport {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;
};

// Observation -> [translation (3), gripper logit]. The network regresses
// translation / action_scale and the {0, 1} close label.
struct BcPolicy {
  MlpModel net;
  BcTrainConfig config;
  uint64_t seed = 0;
  BcReport report;
};

BcPolicy TrainBc(const Dataset& demos, const BcTrainConfig& config,
                 uint64_t seed);

// Translation in table units before clipping, plus the gripper logit.
Eigen::Vector4d BcRawOutput(const BcPolicy& policy,
                            const Eigen::VectorXd& observation);

// Clipped translation; close iff the gripper logit exceeds 0.5.
Action BcAct(const BcPolicy& policy, const Eigen::VectorXd& observation,
             const EnvConfig& env = {});

// Mean squared translation error (table units) of the policy on a dataset.
double BcActionMse(const BcPolicy& policy, const Dataset& data);

inline constexpr int kMaxStepHalvings = 5;

struct RecoveryStep {
  Action action;
  Eigen::Vector3d latent = Eigen::Vector3d::Zero();
  double density = 0.0;
  // density predicted at latent + accepted translation
  double predicted_density = 0.0;
  int halvings = 0;
  bool rejected = false;  // every halving still lowered the density
};

// translation = clip(eta * grad rho(E(s))), halved while the probed density
// at the shifted latent is below the current one. Gripper holds.
RecoveryStep RecoveryAct(const EncoderModel& encoder,
                         const MixtureParams& mixture,
                         const Eigen::VectorXd& observation,
                         const GateConfig& gate, const EnvConfig& env = {});
RecoveryStep RecoveryAct(const EncoderModel& encoder, const MdnModel& mdn,
                         const Eigen::VectorXd& condition,
                         const Eigen::VectorXd& observation,
                         const GateConfig& gate, const EnvConfig& env = {});

struct CombinedStep {
  Action action;
  double gate = 0.0;
  double density = 0.0;
  Eigen::Vector3d latent = Eigen::Vector3d::Zero();
  Eigen::Vector3d bc_delta = Eigen::Vector3d::Zero();
  Eigen::Vector3d recovery_delta = Eigen::Vector3d::Zero();
  GripperCmd bc_gripper = GripperCmd::kOpen;
};

// Convex translation blend; BC drives the gripper only when gate >= 0.5.
Action BlendActions(const Action& bc, const Action& recovery, double gate,
                    const EnvConfig& env = {});

// BC + recovery with the density condition frozen at episode start. The
// mixtures for both gripper states are computed once on construction.
class AugmentedPolicy {
 public:
  AugmentedPolicy(const BcPolicy* bc, const EncoderModel* encoder,
                  const MdnModel* mdn, const GateConfig& gate,
                  const Eigen::VectorXd& initial_observation,
                  const EnvConfig& env = {});

  CombinedStep Act(const Eigen::VectorXd& observation) const;
  RecoveryStep Recover(const Eigen::VectorXd& observation) const;
  double Density(const Eigen::VectorXd& observation) const;

  const MixtureParams& Mixture(bool gripper_closed) const {
    return gripper_closed ? closed_mix_ : open_mix_;
  }
  const Eigen::VectorXd& Condition() const { return initial_observation_; }
  const GateConfig& gate_config() const { return gate_; }

 private:
  const BcPolicy* bc_;
  const EncoderModel* encoder_;
  GateConfig gate_;
  EnvConfig env_;
  Eigen::VectorXd initial_observation_;
  MixtureParams open_mix_;
  MixtureParams closed_mix_;
};

nlohmann::json BcToJson(const BcPolicy& policy);
BcPolicy BcFromJson(const nlohmann::json& j);
void SaveBc(const BcPolicy& policy, const std::string& path);
BcPolicy LoadBc(const std::string& path);

}  // namespace oodr

#endif  // OODR_POLICY_H_
