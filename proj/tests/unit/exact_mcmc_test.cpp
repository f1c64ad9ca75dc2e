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
#include "gtboed/mcmc.hpp"
#include "oracles.hpp"

namespace gtboed {
namespace {

TEST(ExactPosteriorTest, SingleIndividualBayes) {
  const auto prior = ExactPosterior::FromPrior(Prior::Uniform(1, 0.5));
  const auto noise = NoiseModel::Constant(0.97, 0.85, 1);
  const auto post = prior.Update({Group{0}}, {1}, noise);
  EXPECT_NEAR(post.Marginal()[0], 0.85 / (0.85 + 0.03), 1e-12);
  EXPECT_NEAR(post.Marginal()[0], 0.96591, 1e-5);
}

TEST(ExactPosteriorTest, NoiselessPositiveIsCertain) {
  const auto prior = ExactPosterior::FromPrior(Prior::Uniform(1, 0.2));
  const auto post = prior.Update({Group{0}}, {1}, NoiseModel::Constant(1, 1, 1));
  EXPECT_DOUBLE_EQ(post.Marginal()[0], 1.0);
}

TEST(ExactPosteriorTest, EmptyBatchIsIdentity) {
  const auto prior = ExactPosterior::FromPrior(Prior::FromRates({0.1, 0.3, 0.6}));
  const auto post = prior.Update({}, {}, NoiseModel::Constant(0.9, 0.9, 3));
  EXPECT_EQ(std::vector<double>(post.log_mass().begin(), post.log_mass().end()),
            std::vector<double>(prior.log_mass().begin(), prior.log_mass().end()));
}

TEST(ExactPosteriorTest, ContradictionIsDegenerate) {
  const auto exact = NoiseModel::Constant(1, 1, 2);
  const auto prior = ExactPosterior::FromPrior(Prior::Uniform(2, 0.2));
  try {
    prior.Update({Group{0, 1}, Group{0}, Group{1}}, {1, 0, 0}, exact);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateEvidence);
  }
}

TEST(ExactPosteriorTest, ToParticlesKeepsTheMarginal) {
  const auto post = ExactPosterior::FromPrior(Prior::FromRates({0.1, 0.3, 0.6}))
                        .Update({Group{0, 1}}, {1}, NoiseModel::Constant(0.95, 0.9, 2));
  const auto a = post.Marginal();
  const auto b = post.ToParticles().Marginal();
  for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(FlipProbabilityTest, KernelsAtReferenceRatios) {
  EXPECT_EQ(FlipProbability(McmcKernel::kModifiedGibbs, 0.0), 1.0);
  EXPECT_EQ(FlipProbability(McmcKernel::kModifiedGibbs, 2.0), 1.0);
  EXPECT_NEAR(FlipProbability(McmcKernel::kModifiedGibbs, std::log(0.25)), 0.25,
              1e-15);
  EXPECT_DOUBLE_EQ(FlipProbability(McmcKernel::kGibbs, 0.0), 0.5);
  EXPECT_NEAR(FlipProbability(McmcKernel::kGibbs, std::log(3.0)), 0.75, 1e-15);
  EXPECT_EQ(FlipProbability(McmcKernel::kModifiedGibbs, std::nan("")), 0.0);
}

std::vector<double> ToyLogTarget() {
  // n = 3 pmf with unequal masses.
  const double p[8] = {0.30, 0.05, 0.10, 0.15, 0.02, 0.08, 0.2, 0.1};
  std::vector<double> lt(8);
  for (int s = 0; s < 8; ++s) lt[s] = std::log(p[s]);
  return lt;
}

LogPmf AsLogPmf(const std::vector<double>& lt) {
  return [lt](const StateVector& x) {
    uint32_t s = 0;
    for (size_t i = 0; i < x.size(); ++i) s |= uint32_t{x[i]} << i;
    return lt[s];
  };
}

uint32_t Encode(const StateVector& x) {
  uint32_t s = 0;
  for (size_t i = 0; i < x.size(); ++i) s |= uint32_t{x[i]} << i;
  return s;
}

TEST(McmcTest, UniformTargetFlipsEveryCoordinate) {
  const LogPmf flat = [](const StateVector&) { return 0.0; };
  Rng rng(1);
  const StateVector x = ModifiedGibbsSweep(StateVector::FromString("0110"), flat, rng);
  EXPECT_EQ(x.ToString(), "1001");
}

TEST(McmcTest, ModeIsSticky) {
  // Mode 000 with mass 0.97; every neighbour has ratio 0.01.
  const LogPmf target = [](const StateVector& x) {
    return x.Count() == 0 ? std::log(0.97) : std::log(0.0097);
  };
  Rng rng(2);
  int stays = 0;
  for (int i = 0; i < 2000; ++i) {
    stays += ModifiedGibbsSweep(StateVector(3), target, rng).Count() == 0;
  }
  EXPECT_GT(stays / 2000.0, 0.95);
}

TEST(McmcTest, LongRunFrequenciesMatchTarget) {
  const auto lt = ToyLogTarget();
  const LogPmf target = AsLogPmf(lt);
  for (McmcKernel kernel : {McmcKernel::kModifiedGibbs, McmcKernel::kGibbs}) {
    Rng rng(3);
    StateVector x(3);
    std::vector<double> freq(8, 0.0);
    const int sweeps = 1000000;
    for (int i = 0; i < sweeps; ++i) {
      x = kernel == McmcKernel::kGibbs ? GibbsSweep(x, target, rng)
                                       : ModifiedGibbsSweep(x, target, rng);
      freq[Encode(x)] += 1.0 / sweeps;
    }
    for (int s = 0; s < 8; ++s) EXPECT_NEAR(freq[s], std::exp(lt[s]), 0.01);
  }
}

TEST(McmcTest, GibbsSingleCoordinateStationaryFrequency) {
  const double p = 0.3;
  const LogPmf target = [p](const StateVector& x) {
    return std::log(x[0] ? p : 1.0 - p);
  };
  Rng rng(4);
  StateVector x(1);
  int ones = 0;
  for (int i = 0; i < 100000; ++i) {
    x = GibbsSweep(x, target, rng);
    ones += x[0];
  }
  EXPECT_NEAR(ones / 100000.0, p, 0.01);
}

TEST(McmcTest, SweepFollowsTheEnumeratedKernel) {
  const auto lt = ToyLogTarget();
  const LogPmf target = AsLogPmf(lt);
  for (McmcKernel kernel : {McmcKernel::kModifiedGibbs, McmcKernel::kGibbs}) {
    const auto matrix = oracle::SweepMatrix(lt, 3, kernel);
    // pi P = pi.
    for (int t = 0; t < 8; ++t) {
      double v = 0.0;
      for (int s = 0; s < 8; ++s) v += std::exp(lt[s]) * matrix[s * 8 + t];
      EXPECT_NEAR(v, std::exp(lt[t]), 1e-14);
    }
    // Empirical rows of the implementation match the matrix.
    Rng rng(5);
    for (uint32_t start : {0u, 5u}) {
      std::vector<double> freq(8, 0.0);
      const int draws = 200000;
      for (int i = 0; i < draws; ++i) {
        const StateVector x0 = oracle::StateOf(start, 3);
        const StateVector x = kernel == McmcKernel::kGibbs
                                  ? GibbsSweep(x0, target, rng)
                                  : ModifiedGibbsSweep(x0, target, rng);
        freq[Encode(x)] += 1.0 / draws;
      }
      for (int t = 0; t < 8; ++t) {
        EXPECT_NEAR(freq[t], matrix[start * 8 + t], 0.005);
      }
    }
  }
}

}  // namespace
}  // namespace gtboed
