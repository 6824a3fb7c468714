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

#include "oodr/stats.h"

#include <algorithm>
#include <vector>

#include <gtest/gtest.h>

#include "oodr/errors.h"

namespace oodr {
namespace {

std::vector<double> OneToHundred() {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  return v;
}

TEST(Percentile, LinearInterpolation) {
  EXPECT_NEAR(Percentile(OneToHundred(), 5.0), 5.95, 1e-12);
  EXPECT_NEAR(Percentile(OneToHundred(), 0.0), 1.0, 0.0);
  EXPECT_NEAR(Percentile(OneToHundred(), 100.0), 100.0, 0.0);
  EXPECT_NEAR(Median(OneToHundred()), 50.5, 1e-12);
}

TEST(Percentile, OrderDoesNotMatter) {
  std::vector<double> v = OneToHundred();
  std::reverse(v.begin(), v.end());
  EXPECT_NEAR(Percentile(v, 5.0), 5.95, 1e-12);
}

TEST(Percentile, EmptyIsInputError) {
  EXPECT_THROW(Percentile({}, 5.0), InputError);
  EXPECT_THROW(Mean({}), InputError);
}

TEST(Auroc, SeparatedTiedAndReversed) {
  EXPECT_DOUBLE_EQ(Auroc({3, 4, 5}, {0, 1, 2}), 1.0);
  EXPECT_DOUBLE_EQ(Auroc({0, 1, 2}, {3, 4, 5}), 0.0);
  EXPECT_DOUBLE_EQ(Auroc({1, 1}, {1, 1}), 0.5);
  // pairs: (2>1) (2<3) (4>1) (4>3) -> 3 / 4
  EXPECT_DOUBLE_EQ(Auroc({2, 4}, {1, 3}), 0.75);
  EXPECT_THROW(Auroc({}, {1}), InputError);
}

TEST(MixSeed, DistinctStreamsAndStable) {
  EXPECT_EQ(MixSeed(1, 2), MixSeed(1, 2));
  EXPECT_NE(MixSeed(1, 2), MixSeed(1, 3));
  EXPECT_NE(MixSeed(1, 2), MixSeed(2, 2));
}

}  // namespace
}  // namespace oodr
