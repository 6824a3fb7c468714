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

#ifndef OODR_MDN_H_
#define OODR_MDN_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "oodr/dataset.h"
#include "oodr/encoder.h"
#include "oodr/mixture.h"
#include "oodr/mlp.h"

namespace oodr {

// Defaults are sized for raw-density gating at desk scale: a wide scale
// floor keeps the density gradient alive 0.15 away from the demonstrations,
// and a small recovery scale keeps in-distribution ascent steps below the
// action clip so they do not fight the cloned policy.
struct MdnConfig {
  int components = 4;
  std::vector<int> hidden = {128, 64};
  double sigma_floor = 0.08;
  bool reconstruction = false;
  double reconstruction_weight = 1.0;
  double learning_rate = 1e-4;
  int batch_size = 32;
  int epochs = 100;
  double gate_quantile = 1.0;
  double recovery_scale = 1e-5;
};

struct MdnReport {
  double initial_train_nll = 0.0;
  std::vector<double> epoch_nll;
  // empty unless a validation set was supplied
  double initial_heldout_nll = 0.0;
  std::vector<double> heldout_nll;
  bool gate_degenerate = false;
};

// Conditional mixture density network. The trunk maps the condition
// (initial observation + gripper bit) to rectified features; the heads layer
// emits [weight logits (N), means (N x D), log-scales (N x D)], component
// major. The optional decoder reconstructs the initial observation from the
// features.
struct MdnModel {
  MlpModel trunk;
  MlpModel heads;
  MlpModel decoder;  // empty layer list when disabled
  int components = 8;
  int latent_dim = 3;
  double sigma_floor = kSigmaFloor;
  double reconstruction_weight = 1.0;
  GateConfig gate;
  MdnConfig config;
  uint64_t seed = 0;
  MdnReport report;

  bool HasDecoder() const { return !decoder.weights.empty(); }
  int ConditionSize() const { return trunk.InputSize(); }
};

MdnModel InitMdn(int condition_size, const MdnConfig& config, uint64_t seed);

Eigen::VectorXd MakeCondition(const Eigen::VectorXd& initial_observation,
                              bool gripper_closed);

// Reads the gripper bit stored in the last observation entry.
bool ObservationGripperClosed(const Eigen::VectorXd& observation);

MixtureParams MdnForward(const MdnModel& model,
                         const Eigen::VectorXd& condition);

// One sample per column.
struct MdnBatch {
  Eigen::MatrixXd conditions;
  Eigen::MatrixXd latents;
};

struct MdnGradients {
  ParamGradients trunk;
  ParamGradients heads;
  ParamGradients decoder;
};

struct MdnLoss {
  double loss = 0.0;  // nll + reconstruction term
  double nll = 0.0;
  MdnGradients gradients;
};

// Mean negative log-likelihood (plus the reconstruction term when the
// decoder is enabled) with exact gradients.
MdnLoss MdnNll(const MdnModel& model, const MdnBatch& batch);

// Targets E(observation) with conditions built from each trajectory's
// initial observation and the step's gripper bit.
MdnBatch BuildMdnBatch(const Dataset& demos, const EncoderModel& encoder);

// Density of every batch column under its own condition.
std::vector<double> BatchDensities(const MdnModel& model,
                                   const MdnBatch& batch);

// Adam on the demo latents, then calibrates the gate on the training
// densities. Throws TrainingError on a non-finite loss.
MdnModel TrainMdn(const Dataset& demos, const EncoderModel& encoder,
                  const MdnConfig& config, uint64_t seed,
                  const Dataset* validation = nullptr);

nlohmann::json MdnToJson(const MdnModel& model);
MdnModel MdnFromJson(const nlohmann::json& j);
void SaveMdn(const MdnModel& model, const std::string& path);
MdnModel LoadMdn(const std::string& path);

}  // namespace oodr

#endif  // OODR_MDN_H_
