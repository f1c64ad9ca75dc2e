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

// One adaptive testing sequence seen from the policy side: propose a batch,
// observe its outcomes, update the posterior and the decoded marginal. The
// simulator and the campaign service both drive this class.

#ifndef GTBOED_SESSION_HPP_
#define GTBOED_SESSION_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gtboed/core.hpp"
#include "gtboed/decoder.hpp"
#include "gtboed/particles.hpp"
#include "gtboed/policies.hpp"
#include "gtboed/rng.hpp"
#include "gtboed/smc.hpp"

namespace gtboed {

struct SessionConfig {
  Prior prior;
  NoiseModel noise;
  size_t tests_per_cycle = 8;
  size_t max_group_size = 10;
  PolicySpec policy;
  FixedAssay assay;
  SmcConfig smc;
  LbpOptions lbp;
  uint64_t seed = 0;

  // Throws kInvalidArgument listing every offending field.
  void Validate() const;
};

struct CycleRecord {
  GroupBatch batch;
  TestOutcomes outcomes;
  std::vector<double> marginal;
  bool used_lbp = true;
  double seconds = 0.0;
};

class TestingSession {
 public:
  // Random streams are derived from (config.seed, stream_index).
  explicit TestingSession(SessionConfig config, uint64_t stream_index = 0);

  const SessionConfig& config() const { return config_; }
  const TestHistory& history() const { return history_; }
  const std::vector<double>& marginal() const { return marginal_; }
  const std::optional<ParticlePosterior>& posterior() const {
    return posterior_;
  }
  const GroupBatch& pending_batch() const { return pending_; }
  bool awaiting_results() const { return awaiting_; }
  bool last_used_lbp() const { return last_used_lbp_; }
  const Policy& policy() const { return policy_; }

  // Next batch from the policy; empty when the policy is exhausted. Throws
  // kConflict while results for the previous batch are outstanding.
  GroupBatch Propose();

  // Records outcomes for the pending batch. On any error the session is
  // left unchanged.
  void Observe(const TestOutcomes& outcomes);

 private:
  SessionConfig config_;
  Policy policy_;
  Rng smc_rng_;
  Rng selector_rng_;
  TestHistory history_;
  std::optional<ParticlePosterior> posterior_;
  std::vector<double> marginal_;
  GroupBatch pending_;
  bool awaiting_ = false;
  bool last_used_lbp_ = true;
};

}  // namespace gtboed

#endif  // GTBOED_SESSION_HPP_
