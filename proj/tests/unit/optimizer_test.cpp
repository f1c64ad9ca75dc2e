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

#include "gtboed/error.hpp"
#include "gtboed/exact_posterior.hpp"
#include "gtboed/optimizer.hpp"
#include "oracles.hpp"

namespace gtboed {
namespace {

ParticlePosterior ExactParticles(const Prior& prior, const TestHistory& h,
                                 const NoiseModel& noise) {
  return ExactPosterior::FromPrior(prior).Update(h.groups, h.outcomes, noise).ToParticles();
}

GreedyConfig Config(size_t k, size_t max_group_size) {
  GreedyConfig c;
  c.num_groups = k;
  c.max_group_size = max_group_size;
  return c;
}

TEST(GreedyConfigTest, ForwardMustExceedBackward) {
  GreedyConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.forward_steps = 2;
  c.backward_steps = 2;
  EXPECT_THROW(c.Validate(), Error);
  c.backward_steps = -1;
  EXPECT_THROW(c.Validate(), Error);
}

TEST(GreedyMiMaxTest, NoiselessPairBeatsSingletons) {
  const NoiseModel exact = NoiseModel::Constant(1, 1, 2);
  const auto p = ExactParticles(Prior::Uniform(2, 0.3), {}, exact);
  const auto r = GreedyMiMax(p, exact, Config(1, 2));
  ASSERT_EQ(r.batch.size(), 1u);
  EXPECT_EQ(r.batch[0], (Group{0, 1}));
  EXPECT_NEAR(r.utilities[0], BinaryEntropy(0.51), 1e-12);
}

TEST(GreedyMiMaxTest, SingletonTieGoesToLowestIndex) {
  const NoiseModel noise = NoiseModel::Constant(0.9, 0.9, 1);
  const auto p = ExactParticles(Prior::Uniform(4, 0.2), {}, noise);
  const auto r = GreedyMiMax(p, noise, Config(1, 1));
  ASSERT_EQ(r.batch.size(), 1u);
  EXPECT_EQ(r.batch[0], (Group{0}));
}

TEST(GreedyMiMaxTest, RejectsGroupsLargerThanTheNoiseTable) {
  const NoiseModel noise = NoiseModel::Constant(0.9, 0.9, 3);
  const auto p = ExactParticles(Prior::Uniform(5, 0.2), {}, noise);
  try {
    GreedyMiMax(p, noise, Config(1, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfiguration);
  }
}

TEST(GreedyMiMaxTest, UtilitiesTrackBatchMutualInformation) {
  Rng rng(1);
  const size_t n = 9;
  const NoiseModel noise = NoiseModel::Constant(0.95, 0.85, 4);
  const auto p = ExactParticles(Prior::Uniform(n, 0.15), {}, noise);
  const auto r = GreedyMiMax(p, noise, Config(3, 4));
  ASSERT_EQ(r.batch.size(), 3u);
  for (size_t j = 0; j < r.batch.size(); ++j) {
    const GroupBatch prefix(r.batch.begin(), r.batch.begin() + j + 1);
    EXPECT_NEAR(r.utilities[j], MutualInformation(p, prefix, noise), 1e-10);
  }
}

TEST(GreedyMiMaxTest, CloseToExhaustiveOptimum) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 3 + rng.UniformIndex(4);
    const size_t k = 1 + rng.UniformIndex(2);
    const size_t cap = 1 + rng.UniformIndex(n);
    std::vector<double> rates(n);
    for (double& q : rates) q = 0.02 + 0.4 * rng.Uniform();
    const NoiseModel noise =
        NoiseModel::Constant(0.7 + 0.3 * rng.Uniform(), 0.7 + 0.3 * rng.Uniform(), cap);
    const auto p = ExactParticles(Prior::FromRates(rates), {}, noise);
    double best = 0.0;
    for (const auto& batch : oracle::AllBatches(n, k, cap)) {
      best = std::max(best, MutualInformation(p, batch, noise));
    }
    const auto r = GreedyMiMax(p, noise, Config(k, cap));
    EXPECT_GE(MutualInformation(p, r.batch, noise), 0.9 * best) << "trial " << trial;
  }
}

TEST(GreedyGenericTest, NegEntropyReproducesMiMax) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t n = 6;
    std::vector<double> rates(n);
    for (double& q : rates) q = 0.05 + 0.3 * rng.Uniform();
    const NoiseModel noise = NoiseModel::Constant(0.9, 0.8, n);
    TestHistory h;
    h.Append(oracle::RandomBatch(n, 1, n, rng), {static_cast<uint8_t>(trial % 2)});
    const auto p = ExactParticles(Prior::FromRates(rates), h, noise);
    const auto config = Config(2, 1 + rng.UniformIndex(n));
    const auto a = GreedyMiMax(p, noise, config);
    const auto b = GreedyGeneric(p, noise, config, NegEntropyPhi());
    EXPECT_EQ(a.batch, b.batch);
    EXPECT_NEAR(MutualInformation(p, a.batch, noise),
                MutualInformation(p, b.batch, noise), 1e-9);
  }
}

TEST(GreedyGenericTest, SingletonSearchIsArgmaxOfExpectedUtility) {
  Rng rng(4);
  const size_t n = 5;
  std::vector<double> rates(n);
  for (double& q : rates) q = 0.05 + 0.5 * rng.Uniform();
  const NoiseModel noise = NoiseModel::Constant(0.9, 0.8, 1);
  const auto p = ExactParticles(Prior::FromRates(rates), {}, noise);
  const auto phi = ExpectedAucPhi();
  const auto r = GreedyGeneric(p, noise, Config(1, 1), phi);
  size_t best = 0;
  double best_value = -1.0;
  for (uint32_t i = 0; i < n; ++i) {
    const double v = ExpectedUtility(p, {Group{i}}, noise, phi);
    if (v > best_value + kImprovementTolerance) {
      best_value = v;
      best = i;
    }
  }
  ASSERT_EQ(r.batch.size(), 1u);
  EXPECT_EQ(r.batch[0], (Group{static_cast<uint32_t>(best)}));
}

TEST(GreedyGenericTest, AucOnTwoParticlesMatchesExhaustiveGroups) {
  ParticleCloud cloud(3, 2);
  cloud.SetState(0, StateVector::FromString("110"));
  cloud.SetState(1, StateVector::FromString("001"));
  const ParticlePosterior p(cloud, {0.7, 0.3});
  const NoiseModel noise = NoiseModel::Constant(0.9, 0.85, 2);
  const auto phi = ExpectedAucPhi();
  double best = -1.0;
  for (const auto& batch : oracle::AllBatches(3, 1, 2)) {
    best = std::max(best, ExpectedUtility(p, batch, noise, phi));
  }
  const auto r = GreedyGeneric(p, noise, Config(1, 2), phi);
  ASSERT_EQ(r.batch.size(), 1u);
  EXPECT_NEAR(ExpectedUtility(p, r.batch, noise, phi), best, 1e-12);
}

}  // namespace
}  // namespace gtboed
