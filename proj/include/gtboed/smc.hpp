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

// Sequential Monte Carlo update of a particle posterior by one batch of
// tests: adaptive tempering, systematic resampling and MCMC moves, repeated
// until the new likelihood enters with exponent 1.

#ifndef GTBOED_SMC_HPP_
#define GTBOED_SMC_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gtboed/core.hpp"
#include "gtboed/mcmc.hpp"
#include "gtboed/particles.hpp"
#include "gtboed/rng.hpp"

namespace gtboed {

struct SmcConfig {
  size_t num_particles = 10000;
  double target_ess = 0.9;
  int mcmc_sweeps = 4;
  McmcKernel kernel = McmcKernel::kModifiedGibbs;
  double bisection_tolerance = 1e-4;
  int bisection_max_iterations = 60;

  void Validate() const;
};

struct BridgeStep {
  double gamma = 0.0;
  // ESS right after reweighting to `gamma`.
  double ess = 1.0;
  // Fraction of accepted flips in the MCMC moves run at `gamma`; zero for
  // the final step, which is not followed by moves.
  double acceptance_rate = 0.0;
};

struct TemperingTrace {
  std::vector<BridgeStep> steps;
};

// Unnormalized log pmf of prior(x) * prod_past P(y|x) * prod_new P(y|x)^gamma.
// Past tests enter with their full likelihood, so the target is exact
// pointwise, off the particle support as well.
class TemperedTarget {
 public:
  TemperedTarget(const Prior& prior, const TestHistory& past,
                 const GroupBatch& batch, const TestOutcomes& y,
                 const NoiseModel& noise);

  size_t population() const { return logit_.size(); }
  double gamma() const { return gamma_; }
  void set_gamma(double gamma);

  double LogPmf(std::span<const uint64_t> x) const;
  // Log-likelihood of the new batch only (exponent 1).
  double NewLogLikelihood(std::span<const uint64_t> x) const;

  // Incremental evaluator bound to one particle; caches the number of
  // infected members of every test.
  class Walker {
   public:
    Walker(const TemperedTarget& target, std::span<uint64_t> x);

    size_t size() const { return target_.population(); }
    double LogRatioOfFlip(size_t j) const;
    void ApplyFlip(size_t j);
    double NewLogLikelihood() const;

   private:
    bool Bit(size_t j) const { return (x_[j >> 6] >> (j & 63)) & 1u; }

    const TemperedTarget& target_;
    std::span<uint64_t> x_;
    std::vector<uint16_t> counts_;
  };

 private:
  size_t PositiveCount(std::span<const uint64_t> x, size_t t) const;

  std::vector<double> logit_;  // log(q / (1 - q))
  // Test t: masks_[t * words_ ...], members via the per-individual index.
  size_t words_ = 0;
  std::vector<uint64_t> masks_;
  std::vector<double> ll_negative_;
  std::vector<double> ll_positive_;
  std::vector<uint8_t> is_new_;
  std::vector<double> gain_;  // exponent * (ll_positive - ll_negative)
  std::vector<uint32_t> tests_offset_;  // CSR: tests containing individual j
  std::vector<uint32_t> tests_of_;
  double gamma_ = 1.0;
};

struct SmcResult {
  ParticlePosterior posterior;
  TemperingTrace trace;
};

// Moves `current` (approximating the posterior after `past`) to the
// posterior after `past` + (batch, y). Throws kDegenerateEvidence when no
// particle is compatible with the new tests.
SmcResult SmcUpdate(const ParticlePosterior& current, const Prior& prior,
                    const TestHistory& past, const GroupBatch& batch,
                    const TestOutcomes& y, const NoiseModel& noise,
                    const SmcConfig& config, Rng& rng);

// Prior particles updated with the whole history as a single batch.
ParticlePosterior SmcFromPrior(const Prior& prior, const TestHistory& history,
                               const NoiseModel& noise, const SmcConfig& config,
                               Rng& rng);

}  // namespace gtboed

#endif  // GTBOED_SMC_HPP_
