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

#include "oodr/mixture.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "oodr/errors.h"
#include "oodr/stats.h"

namespace oodr {
namespace {

void CheckPoint(const MixtureParams& mix, const Eigen::VectorXd& z) {
  if (z.size() != mix.Dim()) throw ShapeError("mixture point dimension");
  if (!z.allFinite()) throw InputError("mixture point is not finite");
}

// log(w_i) + log N(z; mu_i, sigma_i) for every component
Eigen::VectorXd ComponentLogTerms(const MixtureParams& mix,
                                  const Eigen::VectorXd& z) {
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  Eigen::VectorXd out(mix.Components());
  for (int i = 0; i < mix.Components(); ++i) {
    double acc = std::log(mix.weights[i]);
    for (int d = 0; d < mix.Dim(); ++d) {
      const double s = mix.scales(i, d);
      const double u = (z[d] - mix.means(i, d)) / s;
      acc -= half_log_two_pi + std::log(s) + 0.5 * u * u;
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace

double GmmDensity(const MixtureParams& mix, const Eigen::VectorXd& z) {
  CheckPoint(mix, z);
  return ComponentLogTerms(mix, z).array().exp().sum();
}

double GmmLogDensity(const MixtureParams& mix, const Eigen::VectorXd& z) {
  CheckPoint(mix, z);
  const Eigen::VectorXd terms = ComponentLogTerms(mix, z);
  const double top = terms.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((terms.array() - top).exp().sum());
}

Eigen::VectorXd GmmGrad(const MixtureParams& mix, const Eigen::VectorXd& z) {
  CheckPoint(mix, z);
  const Eigen::VectorXd comp = ComponentLogTerms(mix, z).array().exp();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(mix.Dim());
  for (int i = 0; i < mix.Components(); ++i) {
    for (int d = 0; d < mix.Dim(); ++d) {
      const double s = mix.scales(i, d);
      grad[d] -= comp[i] * (z[d] - mix.means(i, d)) / (s * s);
    }
  }
  return grad;
}

double GmmDensityBound(const MixtureParams& mix) {
  double bound = 0.0;
  for (int i = 0; i < mix.Components(); ++i) {
    double peak = mix.weights[i];
    for (int d = 0; d < mix.Dim(); ++d) {
      peak /= std::sqrt(2.0 * std::numbers::pi) * mix.scales(i, d);
    }
    bound += peak;
  }
  return bound;
}

Eigen::MatrixXd SampleMixture(const MixtureParams& mix, int n,
                              std::mt19937_64& rng) {
  std::discrete_distribution<int> pick(mix.weights.data(),
                                       mix.weights.data() + mix.Components());
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(mix.Dim(), n);
  for (int k = 0; k < n; ++k) {
    const int i = pick(rng);
    for (int d = 0; d < mix.Dim(); ++d) {
      out(d, k) = mix.means(i, d) + mix.scales(i, d) * normal(rng);
    }
  }
  return out;
}

double Gate(double density, const GateConfig& config) {
  return 1.0 / (1.0 + std::exp(-(density + config.epsilon) /
                               config.temperature));
}

GateCalibration CalibrateGate(const std::vector<double>& training_densities,
                              double quantile, double recovery_scale) {
  if (training_densities.empty()) {
    throw InputError("gate calibration needs at least one density");
  }
  const double low = Percentile(training_densities, quantile);
  const double mid = Median(training_densities);
  GateCalibration out;
  out.config.epsilon = -low;
  out.config.temperature = (mid - low) / 4.0;
  out.config.recovery_scale = recovery_scale;
  if (!(out.config.temperature > kTemperatureFloor)) {
    out.config.temperature = kTemperatureFloor;
    out.degenerate = true;
  }
  return out;
}

}  // namespace oodr
