// Copyright 2020 The Authors.
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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gtboed/error.hpp"
#include "gtboed/particles.hpp"

namespace gtboed {
namespace {

ParticlePosterior FromStrings(const std::vector<std::string>& states,
                              std::vector<double> weights) {
  ParticleCloud cloud(states.front().size(), states.size());
  for (size_t i = 0; i < states.size(); ++i) {
    cloud.SetState(i, StateVector::FromString(states[i]));
  }
  return ParticlePosterior(std::move(cloud), std::move(weights));
}

TEST(EssTest, ReferenceValues) {
  EXPECT_DOUBLE_EQ(Ess(std::vector<double>(8, 0.125)), 1.0);
  EXPECT_DOUBLE_EQ(Ess(std::vector<double>{1.0, 0.0, 0.0, 0.0}), 0.25);
  EXPECT_DOUBLE_EQ(Ess(std::vector<double>{0.5, 0.5, 0.0, 0.0}), 0.5);
}

TEST(NextTemperatureTest, UniformLikelihoodJumpsToOne) {
  const std::vector<double> w(5, 0.2);
  const std::vector<double> ll(5, -3.0);
  EXPECT_EQ(NextTemperature(0.0, w, ll, {}), 1.0);
}

TEST(NextTemperatureTest, TwoParticleRootMatchesClosedForm) {
  // ESS of weights (1, r) is (1 + r)^2 / (2 (1 + r^2)); at target 0.9 the
  // root is r = 1/2, so the increment is log 2 / c.
  const double c = 10.0;
  const std::vector<double> w{0.5, 0.5};
  const std::vector<double> ll{0.0, -c};
  const double gamma = NextTemperature(0.0, w, ll, {});
  EXPECT_NEAR(gamma, std::log(2.0) / c, 1e-3);
  EXPECT_NEAR(EssAfterReweight(w, ll, gamma), 0.9, 1e-4);
}

TEST(NextTemperatureTest, ReturnsExactlyOneWhenTargetHoldsAtFullStep) {
  const std::vector<double> w{0.5, 0.5};
  const std::vector<double> ll{0.0, -0.01};
  EXPECT_EQ(NextTemperature(0.3, w, ll, {}), 1.0);
}

TEST(NextTemperatureTest, AllZeroLikelihoodIsDegenerate) {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> w{0.5, 0.5};
  const std::vector<double> ll{-inf, -inf};
  try {
    NextTemperature(0.0, w, ll, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateEvidence);
  }
}

TEST(SystematicResampleTest, UniformWeightsKeepEveryParticle) {
  const std::vector<double> w(6, 1.0 / 6.0);
  for (double u : {0.0, 0.3, 0.999}) {
    EXPECT_EQ(SystematicResample(w, u), std::vector<uint32_t>(6, 1));
  }
}

TEST(SystematicResampleTest, OneHotWeightReplicatesOneParticle) {
  const std::vector<double> w{0.0, 1.0, 0.0};
  EXPECT_EQ(SystematicResample(w, 0.42), (std::vector<uint32_t>{0, 3, 0}));
}

TEST(SystematicResampleTest, CountsAreUnbiasedOverTheOffset) {
  const std::vector<double> w{0.75, 0.25};
  std::vector<double> mean(2, 0.0);
  const int grid = 1000;
  for (int g = 0; g < grid; ++g) {
    const auto counts = SystematicResample(w, (g + 0.5) / grid);
    EXPECT_TRUE(counts == (std::vector<uint32_t>{2, 0}) ||
                counts == (std::vector<uint32_t>{1, 1}));
    mean[0] += counts[0];
    mean[1] += counts[1];
  }
  EXPECT_NEAR(mean[0] / grid, 1.5, 1e-9);
  EXPECT_NEAR(mean[1] / grid, 0.5, 1e-9);
}

TEST(ParticlePosteriorTest, MarginalIsTheWeightedMean) {
  EXPECT_EQ(FromStrings({"101"}, {1.0}).Marginal(),
            (std::vector<double>{1.0, 0.0, 1.0}));
  EXPECT_EQ(FromStrings({"10", "00"}, {0.5, 0.5}).Marginal(),
            (std::vector<double>{0.5, 0.0}));
}

TEST(ParticlePosteriorTest, PriorSamplesMatchTheRate) {
  Rng rng(1);
  const auto p = ParticlePosterior::SampleFromPrior(Prior::Uniform(20, 0.05),
                                                    10000, rng);
  for (double m : p.Marginal()) EXPECT_NEAR(m, 0.05, 0.01);
  Rng again(1);
  EXPECT_EQ(p, ParticlePosterior::SampleFromPrior(Prior::Uniform(20, 0.05),
                                                  10000, again));
}

TEST(ParticlePosteriorTest, SingleParticleHasUnitWeight) {
  Rng rng(2);
  const auto p = ParticlePosterior::SampleFromPrior(Prior::Uniform(3, 0.5), 1, rng);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.weights()[0], 1.0);
}

TEST(ParticleCloudTest, ReplicateFollowsCounts) {
  ParticleCloud cloud(70, 3);
  cloud.SetState(0, StateVector::FromString(std::string(69, '0') + "1"));
  cloud.SetState(2, StateVector::FromString("1" + std::string(69, '0')));
  const std::vector<uint32_t> counts{2, 0, 1};
  const ParticleCloud r = cloud.Replicate(counts);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r.State(0), cloud.State(0));
  EXPECT_EQ(r.State(1), cloud.State(0));
  EXPECT_EQ(r.State(2), cloud.State(2));
  EXPECT_TRUE(r.Bit(0, 69));
}

}  // namespace
}  // namespace gtboed
