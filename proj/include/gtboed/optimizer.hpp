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

// Greedy batch construction. Groups are built one at a time; each group
// grows by rounds of forward additions followed by backward removals.

#ifndef GTBOED_OPTIMIZER_HPP_
#define GTBOED_OPTIMIZER_HPP_

#include <cstddef>
#include <vector>

#include "gtboed/core.hpp"
#include "gtboed/particles.hpp"
#include "gtboed/utility.hpp"

namespace gtboed {

inline constexpr double kImprovementTolerance = 1e-12;

struct GreedyConfig {
  size_t num_groups = 1;
  size_t max_group_size = 10;
  int forward_steps = 3;
  int backward_steps = 2;

  void Validate() const;
};

struct GreedyResult {
  GroupBatch batch;
  // Utility of the first j + 1 groups after group j was accepted.
  std::vector<double> utilities;
};

// Mutual information maximization with incremental candidate scoring.
GreedyResult GreedyMiMax(const ParticlePosterior& posterior,
                         const NoiseModel& noise, const GreedyConfig& config);

// Same search scored by ExpectedUtility with `phi`.
GreedyResult GreedyGeneric(const ParticlePosterior& posterior,
                           const NoiseModel& noise, const GreedyConfig& config,
                           const UtilityFunctional& phi);

}  // namespace gtboed

#endif  // GTBOED_OPTIMIZER_HPP_
