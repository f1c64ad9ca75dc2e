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
#include "gtboed/smc.hpp"
#include "oracles.hpp"

namespace gtboed {
namespace {

double MeanAbsDiff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d / static_cast<double>(a.size());
}

TEST(SmcConfigTest, RejectsBadValues) {
  SmcConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.target_ess = 1.0;
  EXPECT_THROW(c.Validate(), Error);
  c = SmcConfig{};
  c.num_particles = 0;
  EXPECT_THROW(c.Validate(), Error);
}

TEST(SmcUpdateTest, EmptyBatchIsIdentity) {
  const Prior prior = Prior::Uniform(5, 0.2);
  Rng rng(1);
  const auto p = ParticlePosterior::SampleFromPrior(prior, 100, rng);
  const auto r = SmcUpdate(p, prior, {}, {}, {}, NoiseModel::Constant(0.9, 0.9, 5),
                           SmcConfig{}, rng);
  EXPECT_EQ(r.posterior, p);
  EXPECT_TRUE(r.trace.steps.empty());
}

TEST(SmcUpdateTest, OneBatchMatchesExactMarginals) {
  const size_t n = 12;
  const Prior prior = Prior::Uniform(n, 0.1);
  const NoiseModel noise = NoiseModel::Constant(0.97, 0.85, n);
  const GroupBatch batch{Group{0, 1, 2, 3}, Group{3, 4, 5}, Group{6, 7, 8, 9, 10}};
  const TestOutcomes y{1, 1, 0};
  Rng rng(2);
  SmcConfig config;
  const auto start = ParticlePosterior::SampleFromPrior(prior, config.num_particles, rng);
  const auto r = SmcUpdate(start, prior, {}, batch, y, noise, config, rng);
  const auto exact = ExactPosterior::FromPrior(prior).Update(batch, y, noise).Marginal();
  EXPECT_LE(MeanAbsDiff(r.posterior.Marginal(), exact), 0.05);
  ASSERT_FALSE(r.trace.steps.empty());
  EXPECT_EQ(r.trace.steps.back().gamma, 1.0);
  for (size_t s = 0; s + 1 < r.trace.steps.size(); ++s) {
    EXPECT_NEAR(r.trace.steps[s].ess, config.target_ess, 0.02);
    EXPECT_GT(r.trace.steps[s].acceptance_rate, 0.0);
  }
}

TEST(SmcUpdateTest, NoiselessPositiveSingletonFixesTheBit) {
  const Prior prior = Prior::Uniform(6, 0.3);
  const NoiseModel exact = NoiseModel::Constant(1.0, 1.0, 6);
  Rng rng(3);
  SmcConfig config;
  config.num_particles = 2000;
  const auto start = ParticlePosterior::SampleFromPrior(prior, 2000, rng);
  const auto r = SmcUpdate(start, prior, {}, {Group{2}}, {1}, exact, config, rng);
  for (size_t i = 0; i < r.posterior.size(); ++i) {
    if (r.posterior.weights()[i] > 0.0) EXPECT_TRUE(r.posterior.particles().Bit(i, 2));
  }
  EXPECT_DOUBLE_EQ(r.posterior.Marginal()[2], 1.0);
}

TEST(SmcUpdateTest, IncompatibleEvidenceIsDegenerate) {
  const Prior prior = Prior::Uniform(3, 0.2);
  const NoiseModel exact = NoiseModel::Constant(1.0, 1.0, 3);
  // A single all-healthy particle cannot produce a noiseless positive.
  ParticleCloud cloud(3, 1);
  const ParticlePosterior start(cloud, {1.0});
  Rng rng(4);
  try {
    SmcUpdate(start, prior, {}, {Group{0, 1}}, {1}, exact, SmcConfig{}, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateEvidence);
  }
}

TEST(SmcUpdateTest, SameSeedSameResult) {
  const Prior prior = Prior::Uniform(8, 0.1);
  const NoiseModel noise = NoiseModel::Constant(0.95, 0.9, 8);
  SmcConfig config;
  config.num_particles = 500;
  auto run = [&] {
    Rng rng(5);
    const auto start = ParticlePosterior::SampleFromPrior(prior, 500, rng);
    return SmcUpdate(start, prior, {}, {Group{0, 1, 2}}, {1}, noise, config, rng)
        .posterior;
  };
  EXPECT_EQ(run(), run());
}

TEST(SmcFromPriorTest, WholeHistoryMatchesExact) {
  const size_t n = 10;
  const Prior prior = Prior::Uniform(n, 0.1);
  const NoiseModel noise = NoiseModel::Constant(0.97, 0.85, n);
  TestHistory history;
  history.Append({Group{0, 1, 2}, Group{2, 3, 4}}, {1, 0});
  history.Append({Group{0}, Group{5, 6, 7, 8, 9}}, {1, 1});
  Rng rng(6);
  const auto p = SmcFromPrior(prior, history, noise, SmcConfig{}, rng);
  const auto exact = ExactPosterior::FromPrior(prior)
                         .Update(history.groups, history.outcomes, noise)
                         .Marginal();
  EXPECT_LE(MeanAbsDiff(p.Marginal(), exact), 0.05);
}

TEST(TemperedTargetTest, WalkerRatiosMatchTheLogPmf) {
  const size_t n = 7;
  const Prior prior = Prior::FromRates({0.1, 0.2, 0.05, 0.3, 0.15, 0.1, 0.4});
  const NoiseModel noise = NoiseModel::Constant(0.93, 0.81, n);
  TestHistory past;
  past.Append({Group{0, 1, 2}, Group{3, 4}}, {1, 0});
  TemperedTarget target(prior, past, {Group{1, 5}, Group{2, 3, 6}}, {0, 1}, noise);
  target.set_gamma(0.37);
  for (uint32_t s = 0; s < (1u << n); s += 5) {
    std::vector<uint64_t> x{s};
    TemperedTarget::Walker walker(target, x);
    for (size_t j = 0; j < n; ++j) {
      std::vector<uint64_t> flipped{s ^ (uint64_t{1} << j)};
      EXPECT_NEAR(walker.LogRatioOfFlip(j), target.LogPmf(flipped) - target.LogPmf(x),
                  1e-12);
    }
    walker.ApplyFlip(3);
    walker.ApplyFlip(6);
    EXPECT_NEAR(walker.NewLogLikelihood(), target.NewLogLikelihood(x), 1e-12);
  }
}

}  // namespace
}  // namespace gtboed
