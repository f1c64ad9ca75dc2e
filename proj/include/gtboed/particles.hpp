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

// Weighted particle clouds on {0,1}^n and the SMC building blocks that act
// on weights alone: effective sample size, adaptive tempering and
// systematic resampling.

#ifndef GTBOED_PARTICLES_HPP_
#define GTBOED_PARTICLES_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gtboed/core.hpp"
#include "gtboed/rng.hpp"

namespace gtboed {

// N packed states stored contiguously.
class ParticleCloud {
 public:
  ParticleCloud() = default;
  ParticleCloud(size_t population, size_t count);

  size_t population() const { return population_; }
  size_t size() const { return count_; }
  size_t words_per_particle() const { return words_; }

  std::span<const uint64_t> particle(size_t i) const {
    return {bits_.data() + i * words_, words_};
  }
  std::span<uint64_t> mutable_particle(size_t i) {
    return {bits_.data() + i * words_, words_};
  }
  bool Bit(size_t i, size_t j) const {
    return (bits_[i * words_ + (j >> 6)] >> (j & 63)) & 1u;
  }

  StateVector State(size_t i) const;
  void SetState(size_t i, const StateVector& x);

  // New cloud holding counts[i] copies of particle i, in index order.
  ParticleCloud Replicate(std::span<const uint32_t> counts) const;

  std::span<const uint64_t> raw() const { return bits_; }

  bool operator==(const ParticleCloud&) const = default;

 private:
  size_t population_ = 0;
  size_t count_ = 0;
  size_t words_ = 0;
  std::vector<uint64_t> bits_;
};

class ParticlePosterior {
 public:
  ParticlePosterior() = default;
  // Weights are normalized here; they must be non-negative with positive sum.
  ParticlePosterior(ParticleCloud particles, std::vector<double> weights);

  // Keeps the given weights as they are; they must already sum to one.
  static ParticlePosterior WithStoredWeights(ParticleCloud particles,
                                             std::vector<double> weights);
  // N i.i.d. draws from the prior with uniform weights.
  static ParticlePosterior SampleFromPrior(const Prior& prior, size_t count,
                                           Rng& rng);

  size_t size() const { return particles_.size(); }
  size_t population() const { return particles_.population(); }
  const ParticleCloud& particles() const { return particles_; }
  std::span<const double> weights() const { return weights_; }

  // Coordinate i is sum_j w_j x_j[i] / sum_j w_j.
  std::vector<double> Marginal() const;

  bool operator==(const ParticlePosterior&) const = default;

 private:
  ParticlePosterior(ParticleCloud particles, std::vector<double> weights,
                    bool normalize);
  ParticleCloud particles_;
  std::vector<double> weights_;
};

// Normalized effective sample size 1 / (N sum w^2), in [1/N, 1].
double Ess(std::span<const double> weights);

// ESS of w_i * exp(delta * loglik_i) after normalization.
double EssAfterReweight(std::span<const double> weights,
                        std::span<const double> loglik, double delta);

// w_i * exp(delta * loglik_i), normalized.
std::vector<double> Reweight(std::span<const double> weights,
                             std::span<const double> loglik, double delta);

struct TemperingOptions {
  double target_ess = 0.9;
  double tolerance = 1e-4;
  int max_iterations = 60;
};

// Next tempering exponent in (gamma, 1]. Bisects on the increment so that
// the reweighted ESS hits the target; returns 1 when even the full step
// keeps ESS at or above target. Throws kDegenerateEvidence when no particle
// has finite log-likelihood.
double NextTemperature(double gamma, std::span<const double> weights,
                       std::span<const double> loglik,
                       const TemperingOptions& options);

// Systematic resampling with a single uniform offset u in [0, 1).
// Returns replication counts summing to N.
std::vector<uint32_t> SystematicResample(std::span<const double> weights,
                                         double u);
std::vector<uint32_t> SystematicResample(std::span<const double> weights,
                                         Rng& rng);

}  // namespace gtboed

#endif  // GTBOED_PARTICLES_HPP_
