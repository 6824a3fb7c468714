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

#ifndef OODR_STATS_H_
#define OODR_STATS_H_

#include <cstdint>
#include <vector>

namespace oodr {

double Mean(const std::vector<double>& values);
double Median(std::vector<double> values);

// Linear interpolation between closest ranks: rank = q/100 * (n - 1).
double Percentile(std::vector<double> values, double q);

// Probability that a random positive scores above a random negative, ties
// counted as one half.
double Auroc(const std::vector<double>& positives,
             const std::vector<double>& negatives);

// Deterministic stream splitting (SplitMix64 finalizer).
uint64_t MixSeed(uint64_t seed, uint64_t stream);

}  // namespace oodr

#endif  // OODR_STATS_H_
