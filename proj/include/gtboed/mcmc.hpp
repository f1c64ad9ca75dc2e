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

// Single-site MCMC kernels on {0,1}^n. Both scan coordinates in ascending
// order; the modified Gibbs kernel proposes a flip and accepts it with
// probability min(1, pi(flipped) / pi(current)), the Gibbs kernel draws each
// coordinate from its full conditional.

#ifndef GTBOED_MCMC_HPP_
#define GTBOED_MCMC_HPP_

#include <cmath>
#include <cstddef>
#include <functional>

#include "gtboed/core.hpp"
#include "gtboed/rng.hpp"

namespace gtboed {

enum class McmcKernel { kGibbs, kModifiedGibbs };

// Probability of leaving coordinate j flipped, given
// log_ratio = log pi(x with j flipped) - log pi(x).
inline double FlipProbability(McmcKernel kernel, double log_ratio) {
  if (std::isnan(log_ratio)) return 0.0;
  if (kernel == McmcKernel::kModifiedGibbs) {
    return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
  }
  return 1.0 / (1.0 + std::exp(-log_ratio));
}

// One ascending sweep over all coordinates. `Walker` exposes size(),
// LogRatioOfFlip(j) and ApplyFlip(j). Uniforms are drawn only when the flip
// probability is strictly between 0 and 1. Returns the number of flips.
template <class Walker>
size_t Sweep(McmcKernel kernel, Walker& walker, Rng& rng) {
  size_t flips = 0;
  const size_t n = walker.size();
  for (size_t j = 0; j < n; ++j) {
    const double p = FlipProbability(kernel, walker.LogRatioOfFlip(j));
    if (p >= 1.0 || (p > 0.0 && rng.Uniform() < p)) {
      walker.ApplyFlip(j);
      ++flips;
    }
  }
  return flips;
}

using LogPmf = std::function<double(const StateVector&)>;

StateVector ModifiedGibbsSweep(StateVector x, const LogPmf& target, Rng& rng);
StateVector GibbsSweep(StateVector x, const LogPmf& target, Rng& rng);

}  // namespace gtboed

#endif  // GTBOED_MCMC_HPP_
