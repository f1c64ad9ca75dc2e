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

#include "gtboed/session.hpp"

#include <algorithm>
#include <utility>

#include "gtboed/error.hpp"

namespace gtboed {

void SessionConfig::Validate() const {
  Error::FieldErrors fields;
  const size_t n = prior.size();
  if (n < 1 || n > kMaxPopulation) {
    fields.emplace_back("n", "must lie in [1, 1024]");
  }
  for (double q : prior.rates) {
    if (!(q > 0.0 && q < 1.0)) {
      fields.emplace_back("q", "infection rates must lie in (0, 1)");
      break;
    }
  }
  if (tests_per_cycle < 1) {
    fields.emplace_back("tests_per_cycle", "must be >= 1");
  }
  if (max_group_size < 1) {
    fields.emplace_back("max_group_size", "must be >= 1");
  } else if (max_group_size > noise.max_group_size()) {
    fields.emplace_back("max_group_size", "exceeds the noise table length");
  }
  if (policy.stages.empty()) fields.emplace_back("policy", "is required");
  if (policy.NeedsPosterior() && tests_per_cycle > 12) {
    fields.emplace_back("tests_per_cycle", "must be <= 12 for this policy");
  }
  if (policy.NeedsAssay() && assay.size() == 0) {
    fields.emplace_back("assay", "this policy needs a fixed assay");
  }
  const bool uses_random = std::any_of(
      policy.stages.begin(), policy.stages.end(),
      [](const StageSpec& s) { return s.kind == SelectorKind::kRandom; });
  if (uses_random && fields.empty()) {
    try {
      MtGroupSize(prior.MeanRate(), noise, max_group_size);
    } catch (const Error& e) {
      fields.emplace_back("sensitivity", e.what());
    }
  }
  try {
    smc.Validate();
  } catch (const Error& e) {
    fields.emplace_back("smc", e.what());
  }
  if (lbp.max_iterations < 1 || !(lbp.tolerance > 0.0)) {
    fields.emplace_back("lbp", "needs max_iterations >= 1 and tolerance > 0");
  }
  if (!fields.empty()) {
    std::string message = "invalid configuration:";
    for (const auto& [field, text] : fields) {
      message += " " + field + ": " + text + ";";
    }
    message.pop_back();
    throw Error(ErrorCode::kInvalidArgument, message, std::move(fields));
  }
}

TestingSession::TestingSession(SessionConfig config, uint64_t stream_index)
    : config_(std::move(config)),
      policy_(config_.policy),
      smc_rng_(DeriveRng(config_.seed, stream_index, "smc")),
      selector_rng_(DeriveRng(config_.seed, stream_index, "selector")),
      marginal_(config_.prior.rates) {
  config_.Validate();
  if (config_.policy.NeedsPosterior()) {
    posterior_ = ParticlePosterior::SampleFromPrior(
        config_.prior, config_.smc.num_particles, smc_rng_);
  }
}

GroupBatch TestingSession::Propose() {
  if (awaiting_) {
    throw Error(ErrorCode::kConflict,
                "results for the pending batch have not been submitted");
  }
  Policy policy = policy_;
  Rng rng = selector_rng_;
  SelectorContext context;
  context.prior = &config_.prior;
  context.noise = &config_.noise;
  context.max_group_size = config_.max_group_size;
  context.history = &history_;
  context.posterior = posterior_ ? &*posterior_ : nullptr;
  context.marginal = &marginal_;
  context.assay = &config_.assay;
  context.rng = &rng;
  GroupBatch batch = policy.Step(config_.tests_per_cycle, context);

  policy_ = std::move(policy);
  selector_rng_ = rng;
  pending_ = batch;
  awaiting_ = !batch.empty();
  return batch;
}

void TestingSession::Observe(const TestOutcomes& outcomes) {
  if (!awaiting_) {
    throw Error(ErrorCode::kConflict, "no batch is awaiting results");
  }
  if (outcomes.size() != pending_.size()) {
    ThrowInvalidArgument("expected " + std::to_string(pending_.size()) +
                         " outcomes, got " + std::to_string(outcomes.size()));
  }
  for (uint8_t y : outcomes) {
    if (y > 1) ThrowInvalidArgument("outcomes must be 0 or 1");
  }
  Rng rng = smc_rng_;
  TestHistory history = history_;
  history.Append(pending_, outcomes);
  if (!HistoryIsPossible(history, config_.noise)) {
    throw Error(ErrorCode::kDegenerateEvidence,
                "outcomes contradict earlier results under the noise model");
  }
  std::optional<ParticlePosterior> posterior;
  if (posterior_) {
    posterior = SmcUpdate(*posterior_, config_.prior, history_, pending_,
                          outcomes, config_.noise, config_.smc, rng)
                    .posterior;
  }
  auto fallback = [&]() -> std::vector<double> {
    if (posterior) return posterior->Marginal();
    return SmcFromPrior(config_.prior, history, config_.noise, config_.smc, rng)
        .Marginal();
  };
  HybridResult decoded = HybridDecode(history, config_.noise, config_.prior,
                                      fallback, config_.lbp);

  smc_rng_ = rng;
  history_ = std::move(history);
  posterior_ = std::move(posterior);
  marginal_ = std::move(decoded.marginal);
  last_used_lbp_ = decoded.used_lbp;
  pending_.clear();
  awaiting_ = false;
}

}  // namespace gtboed
