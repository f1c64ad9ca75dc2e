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

// Group selectors and staged policies with a pending-groups stack.

#ifndef GTBOED_POLICIES_HPP_
#define GTBOED_POLICIES_HPP_

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "gtboed/core.hpp"
#include "gtboed/particles.hpp"
#include "gtboed/rng.hpp"

namespace gtboed {

// min(max_group_size, 1 + ceil(1 / sqrt(q))).
size_t DorfmanGroupSize(double q, size_t max_group_size);

// Contiguous partition of [0, n) into groups of DorfmanGroupSize.
GroupBatch DorfmanSplit(size_t n, double q, size_t max_group_size);

// One singleton per individual seen in a positive test that has not been
// tested alone yet (neither in `history` nor in `pending`), by index.
GroupBatch SplitPositivesIndividually(const TestHistory& history,
                                      const GroupBatch& pending);

// Halves (ceil, floor of the sorted members) of every positive test of size
// > 1 whose halves were not produced yet.
GroupBatch BinarySplitPositives(const TestHistory& history,
                                const GroupBatch& pending);

// floor(log((s - 1/2) / rho) / log(1 - q)) clamped to [1, max_group_size],
// with the size-1 noise values. Throws kConfiguration when s <= 1/2.
size_t MtGroupSize(double q, const NoiseModel& noise, size_t max_group_size);

// `count` uniformly random subsets of size MtGroupSize.
GroupBatch MtRandomGroups(size_t n, double q, const NoiseModel& noise,
                          size_t max_group_size, size_t count, Rng& rng);

// Pools built by repeatedly taking the cheapest prefix of the individuals
// sorted by increasing marginal.
GroupBatch InformativeDorfman(std::span<const double> marginal,
                              const NoiseModel& noise, size_t max_group_size);

// Expected tests per individual for a pool of the c lowest-risk remaining
// individuals; `sorted` holds their marginals in increasing order.
double InformativeDorfmanCost(std::span<const double> sorted, size_t c,
                              const NoiseModel& noise);

// A fixed list of groups read from text: one group per line, comma-separated
// 0-based indices, '#' starts a comment.
class FixedAssay {
 public:
  FixedAssay() = default;
  explicit FixedAssay(GroupBatch groups) : groups_(std::move(groups)) {}

  static FixedAssay Parse(std::string_view text, size_t n,
                          size_t max_group_size);
  static FixedAssay Load(const std::string& path, size_t n,
                         size_t max_group_size);

  const GroupBatch& groups() const { return groups_; }
  size_t size() const { return groups_.size(); }

  // Groups [cursor, cursor + d), clipped to the end.
  GroupBatch Slice(size_t cursor, size_t d) const;

 private:
  GroupBatch groups_;
};

enum class SelectorKind {
  kIndividual,
  kDorfman,
  kSplitPositives,
  kBinarySplit,
  kRandom,
  kFixedAssay,
  kInformativeDorfman,
  kMiMax,
  kAucMax,
};

const char* SelectorName(SelectorKind kind);

struct StageSpec {
  SelectorKind kind = SelectorKind::kIndividual;
  // Selector calls before moving to the next stage; 0 means no limit.
  size_t max_calls = 0;
  // Move on once the policy has produced this many groups; 0 means no
  // threshold.
  size_t until_tests = 0;
};

struct PolicySpec {
  std::string name;
  std::vector<StageSpec> stages;

  // individual, dorfman, binary_dorfman, random, random_id, origami_id,
  // origami_random, g_mimax, g_aucmax.
  static PolicySpec Named(std::string_view name);
  static std::vector<std::string> Names();

  bool NeedsPosterior() const;
  bool NeedsAssay() const;
};

// What a selector may look at.
struct SelectorContext {
  const Prior* prior = nullptr;
  const NoiseModel* noise = nullptr;
  size_t max_group_size = 0;
  const TestHistory* history = nullptr;
  const ParticlePosterior* posterior = nullptr;
  // Latest decoded marginal (the prior before any test).
  const std::vector<double>* marginal = nullptr;
  const FixedAssay* assay = nullptr;
  Rng* rng = nullptr;
};

class Policy {
 public:
  Policy() = default;
  explicit Policy(PolicySpec spec) : spec_(std::move(spec)) {}

  const PolicySpec& spec() const { return spec_; }
  size_t stage() const { return stage_; }
  const GroupBatch& pending() const { return pending_; }
  // Groups pushed onto the stack so far.
  size_t produced() const { return produced_; }

  // Tops up the stack from the active selectors and pops up to `budget`
  // groups. An empty result means the policy is exhausted for now.
  GroupBatch Step(size_t budget, const SelectorContext& context);

 private:
  bool StageFinished(const SelectorContext& context) const;
  GroupBatch Select(const StageSpec& stage, size_t budget,
                    const SelectorContext& context);

  PolicySpec spec_;
  size_t stage_ = 0;
  size_t calls_ = 0;
  size_t assay_cursor_ = 0;
  size_t produced_ = 0;
  GroupBatch pending_;
};

}  // namespace gtboed

#endif  // GTBOED_POLICIES_HPP_
