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

#ifndef OODR_MLP_H_
#define OODR_MLP_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace oodr {

// Dense network with rectifier hidden layers and a linear output layer.
// weights[k] is (layer_sizes[k+1] x layer_sizes[k]); biases[k] has
// layer_sizes[k+1] entries.
struct MlpModel {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  int InputSize() const { return layer_sizes.front(); }
  int OutputSize() const { return layer_sizes.back(); }
  int LayerCount() const { return static_cast<int>(weights.size()); }
  int ParameterCount() const;
};

// Gradients with the same shapes as an MlpModel's parameters.
struct ParamGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Result of a reverse pass. `input` has one column per batch sample.
struct GradBundle {
  ParamGradients params;
  Eigen::MatrixXd input;
};

// He-style fan-in initialization with zero biases. Throws ConfigError for
// fewer than two layers or any non-positive size.
MlpModel InitModel(std::span<const int> layer_sizes, uint64_t seed);

// Single-sample and batched (one sample per column) evaluation.
Eigen::VectorXd Forward(const MlpModel& model, const Eigen::VectorXd& input);
Eigen::MatrixXd ForwardBatch(const MlpModel& model,
                             const Eigen::MatrixXd& inputs);

// Exact gradients of sum_b <upstream.col(b), Forward(inputs.col(b))> with
// respect to the parameters (summed over the batch) and each input column.
GradBundle Backward(const MlpModel& model, const Eigen::VectorXd& input,
                    const Eigen::VectorXd& upstream);
GradBundle BackwardBatch(const MlpModel& model, const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& upstream);

ParamGradients ZeroGradients(const MlpModel& model);
void AddScaled(ParamGradients& into, const ParamGradients& g, double scale);
void CheckShapes(const MlpModel& model, const ParamGradients& g);
bool AllFinite(const ParamGradients& g);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  ParamGradients first_moment;
  ParamGradients second_moment;
  int64_t step_count = 0;
};

AdamState MakeAdamState(const MlpModel& model, const AdamConfig& config);

// Bias-corrected Adam update in place; increments state.step_count.
void AdamStep(MlpModel& model, const ParamGradients& gradients,
              AdamState& state);

// Parameters flattened layer by layer, weights (row-major) then biases.
Eigen::VectorXd FlattenParameters(const MlpModel& model);
void SetParameters(MlpModel& model, const Eigen::VectorXd& flat);
Eigen::VectorXd FlattenGradients(const ParamGradients& g);

// {layer_sizes, weights (row-major nested arrays), biases}
nlohmann::json ModelToJson(const MlpModel& model);
MlpModel ModelFromJson(const nlohmann::json& j);

}  // namespace oodr

#endif  // OODR_MLP_H_
