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

#include "oodr/encoder.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "oodr/errors.h"
#include "oodr/stats.h"

namespace oodr {
namespace {

struct TransitionTable {
  Eigen::MatrixXd before;
  Eigen::MatrixXd actions;
  Eigen::MatrixXd after;
};

TransitionTable Gather(const Dataset& data, const std::vector<int>& trajs) {
  size_t n = 0;
  for (int t : trajs) n += data.trajectories[t].steps.size();
  TransitionTable table;
  if (n == 0) return table;
  const Eigen::Index obs_len =
      data.trajectories[trajs.front()].initial_observation.size();
  table.before.resize(obs_len, n);
  table.after.resize(obs_len, n);
  table.actions.resize(3, n);
  Eigen::Index col = 0;
  for (int t : trajs) {
    for (const Transition& s : data.trajectories[t].steps) {
      table.before.col(col) = s.observation;
      table.after.col(col) = s.next_observation;
      table.actions.col(col) = s.action;
      ++col;
    }
  }
  return table;
}

Eigen::MatrixXd Columns(const Eigen::MatrixXd& m,
                        std::span<const int> indices) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(indices.size()));
  for (size_t i = 0; i < indices.size(); ++i) out.col(i) = m.col(indices[i]);
  return out;
}

}  // namespace

Eigen::Vector3d Encode(const EncoderModel& model,
                       const Eigen::VectorXd& observation) {
  return Forward(model.net, observation);
}

Eigen::MatrixXd EncodeBatch(const EncoderModel& model,
                            const Eigen::MatrixXd& observations) {
  return ForwardBatch(model.net, observations);
}

LossGrad EquivarianceLoss(const MlpModel& net, const EquivarianceBatch& batch,
                          double anchor_weight) {
  const Eigen::Index n = batch.before.cols();
  if (n == 0) throw InputError("equivariance batch is empty");
  if (batch.anchors.cols() == 0) {
    throw InputError("equivariance batch has no trajectory-initial states");
  }
  if (batch.after.cols() != n || batch.actions.cols() != n ||
      batch.actions.rows() != net.OutputSize()) {
    throw ShapeError("equivariance batch columns do not line up");
  }
  const Eigen::MatrixXd z_before = ForwardBatch(net, batch.before);
  const Eigen::MatrixXd z_after = ForwardBatch(net, batch.after);
  const Eigen::MatrixXd residual = z_after - z_before - batch.actions;
  const Eigen::MatrixXd z_anchor = ForwardBatch(net, batch.anchors);
  const double m = static_cast<double>(batch.anchors.cols());

  LossGrad out;
  out.loss = residual.squaredNorm() / n +
             anchor_weight * z_anchor.squaredNorm() / m;
  const Eigen::MatrixXd upstream = (2.0 / n) * residual;
  out.gradients = BackwardBatch(net, batch.after, upstream).params;
  AddScaled(out.gradients, BackwardBatch(net, batch.before, -upstream).params,
            1.0);
  if (anchor_weight != 0.0) {
    AddScaled(out.gradients,
              BackwardBatch(net, batch.anchors,
                            (2.0 * anchor_weight / m) * z_anchor)
                  .params,
              1.0);
  }
  return out;
}

std::vector<int> HeldOutTrajectories(int n_trajectories, double fraction) {
  std::vector<int> held;
  if (n_trajectories < 2 || fraction <= 0.0) return held;
  const int count = std::clamp(
      static_cast<int>(std::floor(n_trajectories * fraction)), 1,
      n_trajectories - 1);
  for (int i = n_trajectories - count; i < n_trajectories; ++i) {
    held.push_back(i);
  }
  return held;
}

std::vector<double> EquivarianceResiduals(
    const EncoderModel& model, const Dataset& dataset,
    const std::vector<int>& trajectories) {
  const TransitionTable table = Gather(dataset, trajectories);
  std::vector<double> out;
  if (table.before.cols() == 0) return out;
  const Eigen::MatrixXd r = EncodeBatch(model, table.after) -
                            EncodeBatch(model, table.before) - table.actions;
  for (Eigen::Index c = 0; c < r.cols(); ++c) out.push_back(r.col(c).norm());
  return out;
}

EncoderModel TrainEncoder(const Dataset& explore,
                          const EncoderTrainConfig& config, uint64_t seed) {
  if (explore.trajectories.empty() || explore.StepCount() == 0) {
    throw InputError("exploration dataset is empty");
  }
  if (config.batch_size < 1 || config.epochs < 0) {
    throw ConfigError("encoder batch size and epochs must be positive");
  }
  const int n_traj = static_cast<int>(explore.trajectories.size());
  const std::vector<int> held =
      HeldOutTrajectories(n_traj, config.holdout_fraction);
  std::vector<int> train;
  for (int i = 0; i < n_traj; ++i) {
    if (std::find(held.begin(), held.end(), i) == held.end()) {
      train.push_back(i);
    }
  }

  const Eigen::Index obs_len = explore.trajectories[0].initial_observation.size();
  EncoderModel model;
  model.config = config;
  model.seed = seed;
  std::vector<int> sizes = {static_cast<int>(obs_len)};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(3);
  model.net = InitModel(sizes, seed);

  const TransitionTable table = Gather(explore, train);
  Eigen::MatrixXd anchors(obs_len, static_cast<Eigen::Index>(train.size()));
  for (size_t i = 0; i < train.size(); ++i) {
    anchors.col(i) = explore.trajectories[train[i]].initial_observation;
  }
  const EquivarianceBatch full{table.before, table.actions, table.after,
                               anchors};
  model.report.initial_loss =
      EquivarianceLoss(model.net, full, config.anchor_weight).loss;
  model.report.train_transitions = static_cast<int>(table.before.cols());

  AdamState adam = MakeAdamState(model.net, {.learning_rate = config.learning_rate});
  Rng rng(MixSeed(seed, 1));
  std::vector<int> order(table.before.cols());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const int> idx(order.data() + start, stop - start);
      const EquivarianceBatch batch{Columns(table.before, idx),
                                    Columns(table.actions, idx),
                                    Columns(table.after, idx), anchors};
      LossGrad lg = EquivarianceLoss(model.net, batch, config.anchor_weight);
      if (!std::isfinite(lg.loss) || !AllFinite(lg.gradients)) {
        throw TrainingError("encoder loss diverged in epoch " +
                            std::to_string(epoch));
      }
      AdamStep(model.net, lg.gradients, adam);
      total += lg.loss;
      ++batches;
    }
    model.report.epoch_loss.push_back(total / batches);
  }

  const std::vector<double> residuals =
      EquivarianceResiduals(model, explore, held.empty() ? train : held);
  std::vector<double> action_norms;
  for (int t : held.empty() ? train : held) {
    for (const Transition& s : explore.trajectories[t].steps) {
      action_norms.push_back(s.action.norm());
    }
  }
  model.report.heldout_transitions = static_cast<int>(residuals.size());
  model.report.heldout_median_residual = Median(residuals);
  model.report.heldout_median_action = Median(action_norms);
  const Eigen::MatrixXd z0 = EncodeBatch(model, anchors);
  model.report.anchor_mean_norm = z0.colwise().norm().mean();
  return model;
}

nlohmann::json EncoderSidecarJson(const EncoderModel& model) {
  nlohmann::json j;
  j["anchor_weight"] = model.config.anchor_weight;
  j["seed"] = model.seed;
  j["config"] = {{"hidden", model.config.hidden},
                 {"learning_rate", model.config.learning_rate},
                 {"batch_size", model.config.batch_size},
                 {"epochs", model.config.epochs},
                 {"holdout_fraction", model.config.holdout_fraction}};
  const EncoderReport& r = model.report;
  j["report"] = {{"initial_loss", r.initial_loss},
                 {"epoch_loss", r.epoch_loss},
                 {"heldout_median_residual", r.heldout_median_residual},
                 {"heldout_median_action", r.heldout_median_action},
                 {"anchor_mean_norm", r.anchor_mean_norm},
                 {"train_transitions", r.train_transitions},
                 {"heldout_transitions", r.heldout_transitions}};
  return j;
}

void SaveEncoder(const EncoderModel& model, const std::string& path) {
  std::ofstream out(path);
  std::ofstream side(path + ".sidecar.json");
  if (!out || !side) throw FormatError("cannot write encoder to " + path);
  out << ModelToJson(model.net).dump() << '\n';
  side << EncoderSidecarJson(model).dump(2) << '\n';
}

EncoderModel LoadEncoder(const std::string& path) {
  std::ifstream in(path);
  std::ifstream side(path + ".sidecar.json");
  if (!in || !side) throw FormatError("cannot read encoder from " + path);
  EncoderModel model;
  try {
    model.net = ModelFromJson(nlohmann::json::parse(in));
    const nlohmann::json j = nlohmann::json::parse(side);
    model.seed = j.at("seed").get<uint64_t>();
    model.config.anchor_weight = j.at("anchor_weight").get<double>();
    const nlohmann::json& c = j.at("config");
    model.config.hidden = c.at("hidden").get<std::vector<int>>();
    model.config.learning_rate = c.at("learning_rate").get<double>();
    model.config.batch_size = c.at("batch_size").get<int>();
    model.config.epochs = c.at("epochs").get<int>();
    model.config.holdout_fraction = c.at("holdout_fraction").get<double>();
    const nlohmann::json& r = j.at("report");
    model.report.initial_loss = r.at("initial_loss").get<double>();
    model.report.epoch_loss = r.at("epoch_loss").get<std::vector<double>>();
    model.report.heldout_median_residual =
        r.at("heldout_median_residual").get<double>();
    model.report.heldout_median_action =
        r.at("heldout_median_action").get<double>();
    model.report.anchor_mean_norm = r.at("anchor_mean_norm").get<double>();
    model.report.train_transitions = r.at("train_transitions").get<int>();
    model.report.heldout_transitions = r.at("heldout_transitions").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("encoder: ") + e.what());
  }
  if (model.net.OutputSize() != 3) {
    throw FormatError("encoder output must be 3-dimensional");
  }
  return model;
}

}  // namespace oodr
