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

// Batch utilities over a particle posterior: expected utility of a generic
// functional, the closed-form mutual information, and the AUC and
// neg-entropy functionals. Entropies are in nats.

#ifndef GTBOED_UTILITY_HPP_
#define GTBOED_UTILITY_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gtboed/core.hpp"
#include "gtboed/particles.hpp"

namespace gtboed {

inline constexpr size_t kMaxBatchSize = 12;

// Phi(weights, particles): scores a reweighted cloud. `weights` are
// normalized and aligned with the cloud.
struct UtilityFunctional {
  std::string name;
  std::function<double(std::span<const double>, const ParticleCloud&)> eval;
};

UtilityFunctional NegEntropyPhi();
UtilityFunctional ExpectedAucPhi();

// -sum w log w over non-zero weights, without merging duplicate states.
double WeightEntropy(std::span<const double> weights);

// Pairwise AUC with half credit for ties; nullopt when x has no positive or
// no negative entry.
std::optional<double> Auc(std::span<const double> scores, const StateVector& x);

// E_Y Phi(posterior | Y_G = Y) with outcomes below 1e-300 skipped.
double ExpectedUtility(const ParticlePosterior& posterior,
                       const GroupBatch& batch, const NoiseModel& noise,
                       const UtilityFunctional& phi);

// I(X; Y_G) under the particle posterior.
double MutualInformation(const ParticlePosterior& posterior,
                         const GroupBatch& batch, const NoiseModel& noise);

// Single group with positive probability f.
double MutualInformationSingleGroup(double f, double specificity,
                                    double sensitivity);

// Maps a weight vector indexed by group-status patterns (bit t = status of
// group t) to the outcome distribution (bit t = result of test t), in place.
// specificity/sensitivity hold the channel of each of the k groups.
void ApplyTestChannel(std::span<double> values,
                      std::span<const double> specificity,
                      std::span<const double> sensitivity);

// Bit t of entry i is the status of batch group t in particle i.
std::vector<uint32_t> StatusPatterns(const ParticleCloud& particles,
                                     const GroupBatch& batch);

}  // namespace gtboed

#endif  // GTBOED_UTILITY_HPP_
