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

// Exact posterior over all 2^n states. Only usable for small populations;
// it serves as the reference the approximate machinery is checked against.

#ifndef GTBOED_EXACT_POSTERIOR_HPP_
#define GTBOED_EXACT_POSTERIOR_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gtboed/core.hpp"
#include "gtboed/particles.hpp"

namespace gtboed {

class ExactPosterior {
 public:
  static constexpr size_t kMaxPopulation = 24;

  static ExactPosterior FromPrior(const Prior& prior);

  size_t population() const { return population_; }
  // Entry s is the log-probability of the state whose bit i is individual i.
  std::span<const double> log_mass() const { return log_mass_; }
  double Probability(uint32_t state) const;

  // Bayes update; throws kDegenerateEvidence if every state has zero
  // likelihood.
  ExactPosterior Update(const GroupBatch& batch, const TestOutcomes& y,
                        const NoiseModel& noise) const;

  std::vector<double> Marginal() const;

  // Every state with positive mass as one weighted particle.
  ParticlePosterior ToParticles() const;

 private:
  size_t population_ = 0;
  std::vector<double> log_mass_;
};

}  // namespace gtboed

#endif  // GTBOED_EXACT_POSTERIOR_HPP_
