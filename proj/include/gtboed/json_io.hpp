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

// JSON encodings of configurations, batches and posterior snapshots.

#ifndef GTBOED_JSON_IO_HPP_
#define GTBOED_JSON_IO_HPP_

#include <string>

#include "json.hpp"

#include "gtboed/core.hpp"
#include "gtboed/particles.hpp"
#include "gtboed/session.hpp"
#include "gtboed/simulator.hpp"

namespace gtboed {

using Json = nlohmann::json;

inline constexpr int kSnapshotVersion = 1;

Json BatchToJson(const GroupBatch& batch);
// Throws kInvalidArgument on anything but an array of index arrays.
GroupBatch BatchFromJson(const Json& j);

Json OutcomesToJson(const TestOutcomes& y);
TestOutcomes OutcomesFromJson(const Json& j);

// Keys: n, q or rates, specificity, sensitivity (number or per-size array),
// max_group_size, tests_per_cycle, policy, assay (inline groups) or
// assay_file, smc {num_particles, target_ess, mcmc_sweeps, kernel,
// bisection_tolerance, bisection_max_iterations}, lbp {max_iterations,
// tolerance}, seed. Missing keys take defaults; errors name the field.
SessionConfig SessionConfigFromJson(const Json& j);
// Canonical form with the assay inlined and the noise tables expanded.
Json SessionConfigToJson(const SessionConfig& config);

// Session keys plus cycles, thresholds and an optional "truth" object
// {q or rates, specificity, sensitivity} that defaults to the policy side.
SimulationConfig SimulationConfigFromJson(const Json& j);
Json SimulationConfigToJson(const SimulationConfig& config);

// {"format": "gtboed.posterior", "version", "n", "N", "words",
//  "particles": [hex words, least significant first], "weights"}.
Json PosteriorToJson(const ParticlePosterior& posterior);
ParticlePosterior PosteriorFromJson(const Json& j);

}  // namespace gtboed

#endif  // GTBOED_JSON_IO_HPP_
