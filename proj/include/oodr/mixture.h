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

#ifndef OODR_MIXTURE_H_
#define OODR_MIXTURE_H_

#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oodr {

inline constexpr double kSigmaFloor = 1e-3;

// Diagonal Gaussian mixture. weights has N entries summing to one; means and
// scales are (N x D) with strictly positive scales.
struct MixtureParams {
  Eigen::VectorXd weights;
  Eigen::MatrixXd means;
  Eigen::MatrixXd scales;

  int Components() const { return static_cast<int>(weights.size()); }
  int Dim() const { return static_cast<int>(means.cols()); }
};

// rho(z) = sum_i w_i prod_d N(z_d; mu_id, sigma_id). Throws InputError for
// non-finite z and ShapeError for a dimension mismatch.
double GmmDensity(const MixtureParams& mix, const Eigen::VectorXd& z);

// log rho(z), stable for points far from every component.
double GmmLogDensity(const MixtureParams& mix, const Eigen::VectorXd& z);

// Closed-form spatial gradient of GmmDensity.
Eigen::VectorXd GmmGrad(const MixtureParams& mix, const Eigen::VectorXd& z);

// sum_i w_i prod_d (2 pi sigma_id^2)^{-1/2}
double GmmDensityBound(const MixtureParams& mix);

// Draws from the mixture itself.
Eigen::MatrixXd SampleMixture(const MixtureParams& mix, int n,
                              std::mt19937_64& rng);

struct GateConfig {
  double epsilon = 2.0;     // offset
  double temperature = 0.5;
  double recovery_scale = 0.05;
};

// 1 / (1 + exp(-(rho + epsilon) / temperature))
double Gate(double density, const GateConfig& config);

struct GateCalibration {
  GateConfig config;
  bool degenerate = false;  // temperature floor applied
};

inline constexpr double kTemperatureFloor = 1e-3;

// epsilon = -P_q, temperature = max((median - P_q) / 4, floor).
GateCalibration CalibrateGate(const std::vector<double>& training_densities,
                              double quantile = 5.0,
                              double recovery_scale = 0.05);

}  // namespace oodr

#endif  // OODR_MIXTURE_H_
