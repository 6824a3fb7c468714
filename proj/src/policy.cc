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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "oodr/errors.h"
#include "oodr/stats.h"

namespace oodr {
namespace {

struct Regression {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
};

Regression BuildRegression(const Dataset& data, double action_scale) {
  const size_t n = data.StepCount();
  if (n == 0) throw InputError("demo dataset is empty");
  Regression r;
  r.inputs.resize(data.trajectories[0].initial_observation.size(), n);
  r.targets.resize(4, n);
  Eigen::Index col = 0;
  for (const Trajectory& traj : data.trajectories) {
    for (const Transition& s : traj.steps) {
      r.inputs.col(col) = s.observation;
      r.targets.col(col).head<3>() = s.action / action_scale;
      r.targets(3, col) = s.gripper == GripperCmd::kClose ? 1.0 : 0.0;
      ++col;
    }
  }
  return r;
}

Eigen::MatrixXd Columns(const Eigen::MatrixXd& m,
                        std::span<const int> indices) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(indices.size()));
  for (size_t i = 0; i < indices.size(); ++i) out.col(i) = m.col(indices[i]);
  return out;
}

double MeanSquared(const MlpModel& net, const Regression& r) {
  return (ForwardBatch(net, r.inputs) - r.targets).squaredNorm() /
         static_cast<double>(r.inputs.cols());
}

}  // namespace

BcPolicy TrainBc(const Dataset& demos, const BcTrainConfig& config,
                 uint64_t seed) {
  if (config.batch_size < 1 || config.epochs < 0 ||
      !(config.action_scale > 0.0)) {
    throw ConfigError("invalid bc training config");
  }
  const Regression all = BuildRegression(demos, config.action_scale);
  BcPolicy policy;
  policy.config = config;
  policy.seed = seed;
  std::vector<int> sizes = {static_cast<int>(all.inputs.rows())};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(4);
  policy.net = InitModel(sizes, seed);
  policy.report.initial_loss = MeanSquared(policy.net, all);

  AdamState adam =
      MakeAdamState(policy.net, {.learning_rate = config.learning_rate});
  Rng rng(MixSeed(seed, 1));
  std::vector<int> order(all.inputs.cols());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const int> idx(order.data() + start, stop - start);
      const Eigen::MatrixXd x = Columns(all.inputs, idx);
      const Eigen::MatrixXd diff =
          ForwardBatch(policy.net, x) - Columns(all.targets, idx);
      const double b = static_cast<double>(idx.size());
      const double loss = diff.squaredNorm() / b;
      if (!std::isfinite(loss)) {
        throw TrainingError("bc loss diverged in epoch " +
                            std::to_string(epoch));
      }
      const GradBundle g = BackwardBatch(policy.net, x, (2.0 / b) * diff);
      AdamStep(policy.net, g.params, adam);
      total += loss;
      ++batches;
    }
    policy.report.epoch_loss.push_back(total / batches);
  }
  return policy;
}

Eigen::Vector4d BcRawOutput(const BcPolicy& policy,
                            const Eigen::VectorXd& observation) {
  Eigen::Vector4d out = Forward(policy.net, observation);
  out.head<3>() *= policy.config.action_scale;
  return out;
}

Action BcAct(const BcPolicy& policy, const Eigen::VectorXd& observation,
             const EnvConfig& env) {
  const Eigen::Vector4d raw = BcRawOutput(policy, observation);
  if (!raw.allFinite()) throw NumericError("bc output is not finite");
  Action a;
  a.delta = ClipDelta(raw.head<3>(), env);
  a.gripper = raw[3] > 0.5 ? GripperCmd::kClose : GripperCmd::kOpen;
  return a;
}

double BcActionMse(const BcPolicy& policy, const Dataset& data) {
  const Regression r = BuildRegression(data, policy.config.action_scale);
  const Eigen::MatrixXd out = ForwardBatch(policy.net, r.inputs);
  const double scale = policy.config.action_scale;
  return (out.topRows<3>() - r.targets.topRows<3>()).squaredNorm() * scale *
         scale / static_cast<double>(r.inputs.cols());
}

RecoveryStep RecoveryAct(const EncoderModel& encoder,
                         const MixtureParams& mixture,
                         const Eigen::VectorXd& observation,
                         const GateConfig& gate, const EnvConfig& env) {
  RecoveryStep out;
  out.latent = Encode(encoder, observation);
  if (!out.latent.allFinite()) throw NumericError("latent is not finite");
  out.density = GmmDensity(mixture, out.latent);
  const Eigen::Vector3d grad = GmmGrad(mixture, out.latent);
  if (!grad.allFinite()) throw NumericError("density gradient is not finite");
  out.action.gripper = ObservationGripperClosed(observation)
                           ? GripperCmd::kClose
                           : GripperCmd::kOpen;
  Eigen::Vector3d step = ClipDelta(gate.recovery_scale * grad, env);
  for (;;) {
    const double probe = GmmDensity(mixture, out.latent + step);
    if (probe >= out.density) {
      out.predicted_density = probe;
      out.action.delta = step;
      return out;
    }
    if (out.halvings == kMaxStepHalvings) break;
    step *= 0.5;
    ++out.halvings;
  }
  out.rejected = true;
  out.predicted_density = out.density;
  out.action.delta.setZero();
  return out;
}

RecoveryStep RecoveryAct(const EncoderModel& encoder, const MdnModel& mdn,
                         const Eigen::VectorXd& condition,
                         const Eigen::VectorXd& observation,
                         const GateConfig& gate, const EnvConfig& env) {
  return RecoveryAct(encoder, MdnForward(mdn, condition), observation, gate,
                     env);
}

Action BlendActions(const Action& bc, const Action& recovery, double gate,
                    const EnvConfig& env) {
  Action a;
  a.delta = ClipDelta(gate * bc.delta + (1.0 - gate) * recovery.delta, env);
  a.gripper = gate >= 0.5 ? bc.gripper : recovery.gripper;
  return a;
}

AugmentedPolicy::AugmentedPolicy(const BcPolicy* bc,
                                 const EncoderModel* encoder,
                                 const MdnModel* mdn, const GateConfig& gate,
                                 const Eigen::VectorXd& initial_observation,
                                 const EnvConfig& env)
    : bc_(bc),
      encoder_(encoder),
      gate_(gate),
      env_(env),
      initial_observation_(initial_observation),
      open_mix_(MdnForward(*mdn, MakeCondition(initial_observation, false))),
      closed_mix_(MdnForward(*mdn, MakeCondition(initial_observation, true))) {
  if (!(gate.temperature > 0.0) || !(gate.recovery_scale > 0.0)) {
    throw ConfigError("gate temperature and recovery scale must be positive");
  }
}

CombinedStep AugmentedPolicy::Act(const Eigen::VectorXd& observation) const {
  const RecoveryStep rec = Recover(observation);
  const Action bc = BcAct(*bc_, observation, env_);
  CombinedStep out;
  out.latent = rec.latent;
  out.density = rec.density;
  out.gate = Gate(rec.density, gate_);
  out.bc_delta = bc.delta;
  out.bc_gripper = bc.gripper;
  out.recovery_delta = rec.action.delta;
  out.action = BlendActions(bc, rec.action, out.gate, env_);
  return out;
}

RecoveryStep AugmentedPolicy::Recover(
    const Eigen::VectorXd& observation) const {
  return RecoveryAct(*encoder_,
                     Mixture(ObservationGripperClosed(observation)),
                     observation, gate_, env_);
}

double AugmentedPolicy::Density(const Eigen::VectorXd& observation) const {
  return GmmDensity(Mixture(ObservationGripperClosed(observation)),
                    Encode(*encoder_, observation));
}

nlohmann::json BcToJson(const BcPolicy& policy) {
  const BcTrainConfig& c = policy.config;
  return {{"model", ModelToJson(policy.net)},
          {"seed", policy.seed},
          {"config",
           {{"hidden", c.hidden},
            {"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"epochs", c.epochs},
            {"action_scale", c.action_scale}}},
          {"report",
           {{"initial_loss", policy.report.initial_loss},
            {"epoch_loss", policy.report.epoch_loss}}}};
}

BcPolicy BcFromJson(const nlohmann::json& j) {
  BcPolicy p;
  try {
    p.net = ModelFromJson(j.at("model"));
    p.seed = j.at("seed").get<uint64_t>();
    const nlohmann::json& c = j.at("config");
    p.config.hidden = c.at("hidden").get<std::vector<int>>();
    p.config.learning_rate = c.at("learning_rate").get<double>();
    p.config.batch_size = c.at("batch_size").get<int>();
    p.config.epochs = c.at("epochs").get<int>();
    p.config.action_scale = c.at("action_scale").get<double>();
    p.report.initial_loss = j.at("report").at("initial_loss").get<double>();
    p.report.epoch_loss =
        j.at("report").at("epoch_loss").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bc policy: ") + e.what());
  }
  if (p.net.OutputSize() != 4) throw FormatError("bc output must be 4-dim");
  return p;
}

void SaveBc(const BcPolicy& policy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write bc policy to " + path);
  out << BcToJson(policy).dump() << '\n';
}

BcPolicy LoadBc(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read bc policy from " + path);
  try {
    return BcFromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("bc policy: ") + e.what());
  }
}

}  // namespace oodr
