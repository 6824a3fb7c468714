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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "oodr/errors.h"
#include "oodr/stats.h"

namespace oodr {
namespace {

int HeadSize(int components, int dim) {
  return components + 2 * components * dim;
}

MixtureParams Unpack(const MdnModel& m, const Eigen::VectorXd& raw) {
  const int n = m.components;
  const int d = m.latent_dim;
  MixtureParams mix;
  const Eigen::VectorXd logits = raw.head(n);
  const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  mix.weights = e / e.sum();
  mix.means.resize(n, d);
  mix.scales.resize(n, d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      mix.means(i, k) = raw[n + i * d + k];
      mix.scales(i, k) =
          std::max(std::exp(raw[n + n * d + i * d + k]), m.sigma_floor);
    }
  }
  return mix;
}

struct TrunkPass {
  Eigen::MatrixXd pre;       // trunk output before the rectifier
  Eigen::MatrixXd features;  // rectified
};

TrunkPass RunTrunk(const MdnModel& m, const Eigen::MatrixXd& conditions) {
  TrunkPass p;
  p.pre = ForwardBatch(m.trunk, conditions);
  p.features = p.pre.cwiseMax(0.0);
  return p;
}

nlohmann::json ConfigJson(const MdnConfig& c) {
  return {{"components", c.components},
          {"hidden", c.hidden},
          {"sigma_floor", c.sigma_floor},
          {"reconstruction", c.reconstruction},
          {"reconstruction_weight", c.reconstruction_weight},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"gate_quantile", c.gate_quantile},
          {"recovery_scale", c.recovery_scale}};
}

Eigen::MatrixXd Columns(const Eigen::MatrixXd& m,
                        std::span<const int> indices) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(indices.size()));
  for (size_t i = 0; i < indices.size(); ++i) out.col(i) = m.col(indices[i]);
  return out;
}

}  // namespace

MdnModel InitMdn(int condition_size, const MdnConfig& config, uint64_t seed) {
  if (config.components < 1) throw ConfigError("mdn needs >= 1 component");
  if (config.hidden.empty()) throw ConfigError("mdn needs a hidden layer");
  if (!(config.sigma_floor > 0.0)) throw ConfigError("sigma floor must be > 0");
  MdnModel m;
  m.components = config.components;
  m.sigma_floor = config.sigma_floor;
  m.reconstruction_weight = config.reconstruction_weight;
  m.config = config;
  m.seed = seed;
  std::vector<int> trunk = {condition_size};
  trunk.insert(trunk.end(), config.hidden.begin(), config.hidden.end());
  m.trunk = InitModel(trunk, MixSeed(seed, 10));
  const int features = config.hidden.back();
  const int heads[] = {features, HeadSize(m.components, m.latent_dim)};
  m.heads = InitModel(heads, MixSeed(seed, 11));
  if (config.reconstruction) {
    const int decoder[] = {features, condition_size - 1};
    m.decoder = InitModel(decoder, MixSeed(seed, 12));
  }
  return m;
}

Eigen::VectorXd MakeCondition(const Eigen::VectorXd& initial_observation,
                              bool gripper_closed) {
  Eigen::VectorXd c(initial_observation.size() + 1);
  c.head(initial_observation.size()) = initial_observation;
  c[initial_observation.size()] = gripper_closed ? 1.0 : 0.0;
  return c;
}

bool ObservationGripperClosed(const Eigen::VectorXd& observation) {
  return observation[observation.size() - 1] > 0.5;
}

MixtureParams MdnForward(const MdnModel& model,
                         const Eigen::VectorXd& condition) {
  if (condition.size() != model.ConditionSize()) {
    throw ShapeError("mdn condition has " + std::to_string(condition.size()) +
                     " entries, expected " +
                     std::to_string(model.ConditionSize()));
  }
  const TrunkPass p = RunTrunk(model, condition);
  return Unpack(model, ForwardBatch(model.heads, p.features).col(0));
}

MdnLoss MdnNll(const MdnModel& model, const MdnBatch& batch) {
  const Eigen::Index b = batch.conditions.cols();
  if (b == 0) throw InputError("mdn batch is empty");
  if (batch.latents.cols() != b || batch.latents.rows() != model.latent_dim) {
    throw ShapeError("mdn batch latents do not match conditions");
  }
  if (batch.conditions.rows() != model.ConditionSize()) {
    throw ShapeError("mdn batch condition size mismatch");
  }
  const int n = model.components;
  const int d = model.latent_dim;
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const TrunkPass p = RunTrunk(model, batch.conditions);
  const Eigen::MatrixXd raw = ForwardBatch(model.heads, p.features);

  MdnLoss out;
  Eigen::MatrixXd d_raw = Eigen::MatrixXd::Zero(raw.rows(), b);
  double nll_sum = 0.0;
  Eigen::VectorXd log_terms(n);
  for (Eigen::Index c = 0; c < b; ++c) {
    const MixtureParams mix = Unpack(model, raw.col(c));
    const Eigen::VectorXd z = batch.latents.col(c);
    for (int i = 0; i < n; ++i) {
      double acc = std::log(mix.weights[i]);
      for (int k = 0; k < d; ++k) {
        const double s = mix.scales(i, k);
        const double u = (z[k] - mix.means(i, k)) / s;
        acc -= half_log_two_pi + std::log(s) + 0.5 * u * u;
      }
      log_terms[i] = acc;
    }
    const double top = log_terms.maxCoeff();
    const double lse = top + std::log((log_terms.array() - top).exp().sum());
    nll_sum -= lse;
    const Eigen::VectorXd resp = (log_terms.array() - lse).exp();
    for (int i = 0; i < n; ++i) {
      d_raw(i, c) = mix.weights[i] - resp[i];
      for (int k = 0; k < d; ++k) {
        const double s = mix.scales(i, k);
        const double u = (z[k] - mix.means(i, k)) / s;
        d_raw(n + i * d + k, c) = -resp[i] * u / s;
        const double ls = raw(n + n * d + i * d + k, c);
        if (std::exp(ls) > model.sigma_floor) {
          d_raw(n + n * d + i * d + k, c) = resp[i] * (1.0 - u * u);
        }
      }
    }
  }
  out.nll = nll_sum / b;
  out.loss = out.nll;
  d_raw /= static_cast<double>(b);

  GradBundle heads = BackwardBatch(model.heads, p.features, d_raw);
  out.gradients.heads = std::move(heads.params);
  Eigen::MatrixXd d_features = std::move(heads.input);
  if (model.HasDecoder()) {
    const Eigen::MatrixXd target =
        batch.conditions.topRows(model.ConditionSize() - 1);
    const Eigen::MatrixXd diff = ForwardBatch(model.decoder, p.features) - target;
    const double w = model.reconstruction_weight;
    out.loss += w * diff.squaredNorm() / b;
    GradBundle dec = BackwardBatch(model.decoder, p.features,
                                   (2.0 * w / b) * diff);
    out.gradients.decoder = std::move(dec.params);
    d_features += dec.input;
  }
  d_features = (p.pre.array() > 0.0).select(d_features, 0.0);
  out.gradients.trunk =
      BackwardBatch(model.trunk, batch.conditions, d_features).params;
  return out;
}

MdnBatch BuildMdnBatch(const Dataset& demos, const EncoderModel& encoder) {
  const size_t n = demos.StepCount();
  if (n == 0) throw InputError("demo dataset is empty");
  const Eigen::Index obs_len = demos.trajectories[0].initial_observation.size();
  Eigen::MatrixXd observations(obs_len, n);
  MdnBatch batch;
  batch.conditions.resize(obs_len + 1, n);
  Eigen::Index col = 0;
  for (const Trajectory& traj : demos.trajectories) {
    for (const Transition& s : traj.steps) {
      observations.col(col) = s.observation;
      batch.conditions.col(col) = MakeCondition(
          traj.initial_observation, ObservationGripperClosed(s.observation));
      ++col;
    }
  }
  batch.latents = EncodeBatch(encoder, observations);
  return batch;
}

std::vector<double> BatchDensities(const MdnModel& model,
                                   const MdnBatch& batch) {
  std::vector<double> out;
  out.reserve(batch.conditions.cols());
  const TrunkPass p = RunTrunk(model, batch.conditions);
  const Eigen::MatrixXd raw = ForwardBatch(model.heads, p.features);
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    out.push_back(GmmDensity(Unpack(model, raw.col(c)), batch.latents.col(c)));
  }
  return out;
}

MdnModel TrainMdn(const Dataset& demos, const EncoderModel& encoder,
                  const MdnConfig& config, uint64_t seed,
                  const Dataset* validation) {
  if (config.batch_size < 1 || config.epochs < 0) {
    throw ConfigError("mdn batch size and epochs must be positive");
  }
  const MdnBatch all = BuildMdnBatch(demos, encoder);
  MdnModel model =
      InitMdn(static_cast<int>(all.conditions.rows()), config, seed);
  MdnBatch heldout;
  if (validation != nullptr) heldout = BuildMdnBatch(*validation, encoder);

  model.report.initial_train_nll = MdnNll(model, all).nll;
  if (validation != nullptr) {
    model.report.initial_heldout_nll = MdnNll(model, heldout).nll;
  }

  const AdamConfig adam_config{.learning_rate = config.learning_rate};
  AdamState trunk_adam = MakeAdamState(model.trunk, adam_config);
  AdamState heads_adam = MakeAdamState(model.heads, adam_config);
  AdamState decoder_adam = MakeAdamState(model.decoder, adam_config);
  Rng rng(MixSeed(seed, 1));
  std::vector<int> order(all.conditions.cols());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const int> idx(order.data() + start, stop - start);
      const MdnBatch batch{Columns(all.conditions, idx),
                           Columns(all.latents, idx)};
      const MdnLoss l = MdnNll(model, batch);
      if (!std::isfinite(l.loss) || !AllFinite(l.gradients.trunk) ||
          !AllFinite(l.gradients.heads)) {
        throw TrainingError("mdn loss diverged in epoch " +
                            std::to_string(epoch));
      }
      AdamStep(model.trunk, l.gradients.trunk, trunk_adam);
      AdamStep(model.heads, l.gradients.heads, heads_adam);
      if (model.HasDecoder()) {
        AdamStep(model.decoder, l.gradients.decoder, decoder_adam);
      }
      total += l.nll;
      ++batches;
    }
    model.report.epoch_nll.push_back(total / batches);
    if (validation != nullptr) {
      model.report.heldout_nll.push_back(MdnNll(model, heldout).nll);
    }
  }

  const GateCalibration cal = CalibrateGate(
      BatchDensities(model, all), config.gate_quantile, config.recovery_scale);
  model.gate = cal.config;
  model.report.gate_degenerate = cal.degenerate;
  return model;
}

nlohmann::json MdnToJson(const MdnModel& model) {
  nlohmann::json j;
  j["trunk"] = ModelToJson(model.trunk);
  j["heads"] = ModelToJson(model.heads);
  if (model.HasDecoder()) j["decoder"] = ModelToJson(model.decoder);
  j["component_count"] = model.components;
  j["latent_dim"] = model.latent_dim;
  j["sigma_floor"] = model.sigma_floor;
  j["reconstruction_weight"] = model.reconstruction_weight;
  j["gate_config"] = {{"epsilon", model.gate.epsilon},
                      {"temperature", model.gate.temperature},
                      {"recovery_scale", model.gate.recovery_scale}};
  j["seed"] = model.seed;
  j["config"] = ConfigJson(model.config);
  j["report"] = {{"initial_train_nll", model.report.initial_train_nll},
                 {"epoch_nll", model.report.epoch_nll},
                 {"initial_heldout_nll", model.report.initial_heldout_nll},
                 {"heldout_nll", model.report.heldout_nll},
                 {"gate_degenerate", model.report.gate_degenerate}};
  return j;
}

MdnModel MdnFromJson(const nlohmann::json& j) {
  MdnModel m;
  try {
    m.trunk = ModelFromJson(j.at("trunk"));
    m.heads = ModelFromJson(j.at("heads"));
    if (j.contains("decoder")) m.decoder = ModelFromJson(j.at("decoder"));
    m.components = j.at("component_count").get<int>();
    m.latent_dim = j.at("latent_dim").get<int>();
    m.sigma_floor = j.at("sigma_floor").get<double>();
    m.reconstruction_weight = j.at("reconstruction_weight").get<double>();
    const nlohmann::json& g = j.at("gate_config");
    m.gate.epsilon = g.at("epsilon").get<double>();
    m.gate.temperature = g.at("temperature").get<double>();
    m.gate.recovery_scale = g.at("recovery_scale").get<double>();
    m.seed = j.at("seed").get<uint64_t>();
    const nlohmann::json& c = j.at("config");
    m.config.components = c.at("components").get<int>();
    m.config.hidden = c.at("hidden").get<std::vector<int>>();
    m.config.sigma_floor = c.at("sigma_floor").get<double>();
    m.config.reconstruction = c.at("reconstruction").get<bool>();
    m.config.reconstruction_weight = c.at("reconstruction_weight").get<double>();
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.batch_size = c.at("batch_size").get<int>();
    m.config.epochs = c.at("epochs").get<int>();
    m.config.gate_quantile = c.at("gate_quantile").get<double>();
    m.config.recovery_scale = c.at("recovery_scale").get<double>();
    const nlohmann::json& r = j.at("report");
    m.report.initial_train_nll = r.at("initial_train_nll").get<double>();
    m.report.epoch_nll = r.at("epoch_nll").get<std::vector<double>>();
    m.report.initial_heldout_nll = r.at("initial_heldout_nll").get<double>();
    m.report.heldout_nll = r.at("heldout_nll").get<std::vector<double>>();
    m.report.gate_degenerate = r.at("gate_degenerate").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("mdn: ") + e.what());
  }
  if (m.heads.OutputSize() != HeadSize(m.components, m.latent_dim) ||
      m.heads.InputSize() != m.trunk.OutputSize()) {
    throw FormatError("mdn heads do not match component count");
  }
  return m;
}

void SaveMdn(const MdnModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write mdn to " + path);
  out << MdnToJson(model).dump() << '\n';
}

MdnModel LoadMdn(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read mdn from " + path);
  try {
    return MdnFromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("mdn: ") + e.what());
  }
}

}  // namespace oodr
