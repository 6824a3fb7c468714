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

#ifndef OODR_ENCODER_H_
#define OODR_ENCODER_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "oodr/dataset.h"
#include "oodr/mlp.h"

namespace oodr {

struct EncoderTrainConfig {
  std::vector<int> hidden = {128, 64};
  double learning_rate = 1e-3;
  double anchor_weight = 0.1;
  int batch_size = 32;
  int epochs = 200;
  double holdout_fraction = 0.25;
};

struct EncoderReport {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;
  double heldout_median_residual = 0.0;
  double heldout_median_action = 0.0;
  double anchor_mean_norm = 0.0;
  int train_transitions = 0;
  int heldout_transitions = 0;
};

// Observation -> R^3 map trained so that E(s') = E(s) + a.
struct EncoderModel {
  MlpModel net;
  EncoderTrainConfig config;
  uint64_t seed = 0;
  EncoderReport report;
};

Eigen::Vector3d Encode(const EncoderModel& model,
                       const Eigen::VectorXd& observation);
// one observation per column in, one latent per column out
Eigen::MatrixXd EncodeBatch(const EncoderModel& model,
                            const Eigen::MatrixXd& observations);

// Transitions (one per column) plus the trajectory-initial observations that
// are pulled toward the latent origin.
struct EquivarianceBatch {
  Eigen::MatrixXd before;
  Eigen::MatrixXd actions;
  Eigen::MatrixXd after;
  Eigen::MatrixXd anchors;
};

struct LossGrad {
  double loss = 0.0;
  ParamGradients gradients;
};

// mean ||E(s') - E(s) - a||^2 + anchor_weight * mean ||E(s0)||^2
LossGrad EquivarianceLoss(const MlpModel& net, const EquivarianceBatch& batch,
                          double anchor_weight);

// Trajectory indices held out for evaluation: the last
// max(1, floor(n * fraction)) trajectories when n > 1, none otherwise.
std::vector<int> HeldOutTrajectories(int n_trajectories, double fraction);

// ||E(s') - E(s) - a|| for every transition of the given trajectories.
std::vector<double> EquivarianceResiduals(const EncoderModel& model,
                                          const Dataset& dataset,
                                          const std::vector<int>& trajectories);

// Minibatch Adam on the exploration set; throws TrainingError on divergence.
EncoderModel TrainEncoder(const Dataset& explore,
                          const EncoderTrainConfig& config, uint64_t seed);

nlohmann::json EncoderSidecarJson(const EncoderModel& model);
void SaveEncoder(const EncoderModel& model, const std::string& path);
EncoderModel LoadEncoder(const std::string& path);

}  // namespace oodr

#endif  // OODR_ENCODER_H_
