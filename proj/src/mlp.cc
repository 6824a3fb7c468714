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

#include "oodr/mlp.h"

#include <cmath>
#include <random>
#include <string>

#include "oodr/errors.h"

namespace oodr {
namespace {

std::string ShapeString(Eigen::Index rows, Eigen::Index cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

void CheckInputRows(const MlpModel& model, Eigen::Index rows) {
  if (rows != model.InputSize()) {
    throw ShapeError("mlp input has " + std::to_string(rows) +
                     " entries, expected " +
                     std::to_string(model.InputSize()));
  }
}

// pre-activations are not stored; rectifier masks are recovered from the
// post-activation values (relu(x) > 0 iff x > 0)
std::vector<Eigen::MatrixXd> ForwardActivations(const MlpModel& model,
                                                const Eigen::MatrixXd& x) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(model.weights.size() + 1);
  acts.push_back(x);
  const int n = model.LayerCount();
  for (int k = 0; k < n; ++k) {
    Eigen::MatrixXd z = model.weights[k] * acts.back();
    z.colwise() += model.biases[k];
    if (k + 1 < n) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

int MlpModel::ParameterCount() const {
  int count = 0;
  for (size_t k = 0; k < weights.size(); ++k) {
    count += static_cast<int>(weights[k].size() + biases[k].size());
  }
  return count;
}

MlpModel InitModel(std::span<const int> layer_sizes, uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw ConfigError("mlp needs at least an input and an output layer");
  }
  for (int s : layer_sizes) {
    if (s < 1) throw ConfigError("mlp layer sizes must be positive");
  }
  MlpModel model;
  model.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
  std::mt19937_64 rng(seed);
  for (size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
    const int fan_in = layer_sizes[k];
    const int fan_out = layer_sizes[k + 1];
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) w(r, c) = normal(rng);
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return model;
}

Eigen::VectorXd Forward(const MlpModel& model, const Eigen::VectorXd& input) {
  return ForwardBatch(model, input);
}

Eigen::MatrixXd ForwardBatch(const MlpModel& model,
                             const Eigen::MatrixXd& inputs) {
  CheckInputRows(model, inputs.rows());
  Eigen::MatrixXd a = inputs;
  const int n = model.LayerCount();
  for (int k = 0; k < n; ++k) {
    Eigen::MatrixXd z = model.weights[k] * a;
    z.colwise() += model.biases[k];
    if (k + 1 < n) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

GradBundle Backward(const MlpModel& model, const Eigen::VectorXd& input,
                    const Eigen::VectorXd& upstream) {
  return BackwardBatch(model, input, upstream);
}

GradBundle BackwardBatch(const MlpModel& model, const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& upstream) {
  CheckInputRows(model, inputs.rows());
  if (upstream.rows() != model.OutputSize() ||
      upstream.cols() != inputs.cols()) {
    throw ShapeError("upstream gradient " +
                     ShapeString(upstream.rows(), upstream.cols()) +
                     " does not match output " +
                     ShapeString(model.OutputSize(), inputs.cols()));
  }
  const std::vector<Eigen::MatrixXd> acts = ForwardActivations(model, inputs);
  const int n = model.LayerCount();
  GradBundle out;
  out.params.weights.resize(n);
  out.params.biases.resize(n);
  Eigen::MatrixXd delta = upstream;
  for (int k = n - 1; k >= 0; --k) {
    if (k + 1 < n) {
      delta = (acts[k + 1].array() > 0.0).select(delta, 0.0);
    }
    out.params.weights[k] = delta * acts[k].transpose();
    out.params.biases[k] = delta.rowwise().sum();
    delta = model.weights[k].transpose() * delta;
  }
  out.input = std::move(delta);
  return out;
}

ParamGradients ZeroGradients(const MlpModel& model) {
  ParamGradients g;
  for (int k = 0; k < model.LayerCount(); ++k) {
    g.weights.push_back(Eigen::MatrixXd::Zero(model.weights[k].rows(),
                                              model.weights[k].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(model.biases[k].size()));
  }
  return g;
}

void AddScaled(ParamGradients& into, const ParamGradients& g, double scale) {
  if (into.weights.size() != g.weights.size()) {
    throw ShapeError("gradient layer counts differ");
  }
  for (size_t k = 0; k < g.weights.size(); ++k) {
    into.weights[k] += scale * g.weights[k];
    into.biases[k] += scale * g.biases[k];
  }
}

void CheckShapes(const MlpModel& model, const ParamGradients& g) {
  const size_t n = model.weights.size();
  if (g.weights.size() != n || g.biases.size() != n) {
    throw ShapeError("gradient layer count does not match model");
  }
  for (size_t k = 0; k < n; ++k) {
    if (g.weights[k].rows() != model.weights[k].rows() ||
        g.weights[k].cols() != model.weights[k].cols() ||
        g.biases[k].size() != model.biases[k].size()) {
      throw ShapeError("gradient shape mismatch at layer " +
                       std::to_string(k));
    }
  }
}

bool AllFinite(const ParamGradients& g) {
  for (size_t k = 0; k < g.weights.size(); ++k) {
    if (!g.weights[k].allFinite() || !g.biases[k].allFinite()) return false;
  }
  return true;
}

AdamState MakeAdamState(const MlpModel& model, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  state.first_moment = ZeroGradients(model);
  state.second_moment = ZeroGradients(model);
  return state;
}

void AdamStep(MlpModel& model, const ParamGradients& gradients,
              AdamState& state) {
  CheckShapes(model, gradients);
  CheckShapes(model, state.first_moment);
  CheckShapes(model, state.second_moment);
  const AdamConfig& c = state.config;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = c.beta1 * m + (1.0 - c.beta1) * grad;
    v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
    param.array() -= c.learning_rate * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + c.epsilon);
  };
  for (int k = 0; k < model.LayerCount(); ++k) {
    update(model.weights[k], gradients.weights[k],
           state.first_moment.weights[k], state.second_moment.weights[k]);
    update(model.biases[k], gradients.biases[k], state.first_moment.biases[k],
           state.second_moment.biases[k]);
  }
}

Eigen::VectorXd FlattenParameters(const MlpModel& model) {
  Eigen::VectorXd flat(model.ParameterCount());
  Eigen::Index i = 0;
  for (int k = 0; k < model.LayerCount(); ++k) {
    const Eigen::MatrixXd& w = model.weights[k];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat[i++] = w(r, c);
    }
    for (Eigen::Index r = 0; r < model.biases[k].size(); ++r) {
      flat[i++] = model.biases[k][r];
    }
  }
  return flat;
}

void SetParameters(MlpModel& model, const Eigen::VectorXd& flat) {
  if (flat.size() != model.ParameterCount()) {
    throw ShapeError("flat parameter vector has wrong length");
  }
  Eigen::Index i = 0;
  for (int k = 0; k < model.LayerCount(); ++k) {
    Eigen::MatrixXd& w = model.weights[k];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[i++];
    }
    for (Eigen::Index r = 0; r < model.biases[k].size(); ++r) {
      model.biases[k][r] = flat[i++];
    }
  }
}

Eigen::VectorXd FlattenGradients(const ParamGradients& g) {
  Eigen::Index total = 0;
  for (size_t k = 0; k < g.weights.size(); ++k) {
    total += g.weights[k].size() + g.biases[k].size();
  }
  Eigen::VectorXd flat(total);
  Eigen::Index i = 0;
  for (size_t k = 0; k < g.weights.size(); ++k) {
    for (Eigen::Index r = 0; r < g.weights[k].rows(); ++r) {
      for (Eigen::Index c = 0; c < g.weights[k].cols(); ++c) {
        flat[i++] = g.weights[k](r, c);
      }
    }
    for (Eigen::Index r = 0; r < g.biases[k].size(); ++r) {
      flat[i++] = g.biases[k][r];
    }
  }
  return flat;
}

nlohmann::json ModelToJson(const MlpModel& model) {
  nlohmann::json j;
  j["layer_sizes"] = model.layer_sizes;
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (int k = 0; k < model.LayerCount(); ++k) {
    nlohmann::json rows = nlohmann::json::array();
    const Eigen::MatrixXd& w = model.weights[k];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      std::vector<double> row(w.cols());
      for (Eigen::Index c = 0; c < w.cols(); ++c) row[c] = w(r, c);
      rows.push_back(std::move(row));
    }
    weights.push_back(std::move(rows));
    const Eigen::VectorXd& b = model.biases[k];
    biases.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j;
}

MlpModel ModelFromJson(const nlohmann::json& j) {
  try {
    const std::vector<int> sizes = j.at("layer_sizes").get<std::vector<int>>();
    MlpModel model = InitModel(sizes, 0);
    const nlohmann::json& weights = j.at("weights");
    const nlohmann::json& biases = j.at("biases");
    if (weights.size() != model.weights.size() ||
        biases.size() != model.biases.size()) {
      throw FormatError("model json layer count mismatch");
    }
    for (int k = 0; k < model.LayerCount(); ++k) {
      Eigen::MatrixXd& w = model.weights[k];
      const nlohmann::json& rows = weights[k];
      if (static_cast<Eigen::Index>(rows.size()) != w.rows()) {
        throw FormatError("model json weight rows mismatch");
      }
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        const auto row = rows[r].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != w.cols()) {
          throw FormatError("model json weight cols mismatch");
        }
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = row[c];
      }
      const auto b = biases[k].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(b.size()) != model.biases[k].size()) {
        throw FormatError("model json bias length mismatch");
      }
      model.biases[k] = Eigen::Map<const Eigen::VectorXd>(
          b.data(), static_cast<Eigen::Index>(b.size()));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model json: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("model json: ") + e.what());
  }
}

}  // namespace oodr
