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

#include "gtboed/policies.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "gtboed/error.hpp"
#include "gtboed/optimizer.hpp"
#include "gtboed/utility.hpp"

namespace gtboed {
namespace {

std::set<Group> Emitted(const TestHistory& history, const GroupBatch& pending) {
  std::set<Group> out(history.groups.begin(), history.groups.end());
  out.insert(pending.begin(), pending.end());
  return out;
}

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

size_t DorfmanGroupSize(double q, size_t max_group_size) {
  if (!(q > 0.0 && q < 1.0)) ThrowInvalidArgument("q must lie in (0, 1)");
  const size_t c = 1 + static_cast<size_t>(std::ceil(1.0 / std::sqrt(q)));
  return std::max<size_t>(1, std::min(max_group_size, c));
}

GroupBatch DorfmanSplit(size_t n, double q, size_t max_group_size) {
  const size_t c = DorfmanGroupSize(q, max_group_size);
  GroupBatch out;
  for (size_t start = 0; start < n; start += c) {
    std::vector<uint32_t> members;
    for (size_t i = start; i < std::min(n, start + c); ++i) {
      members.push_back(static_cast<uint32_t>(i));
    }
    out.emplace_back(std::move(members));
  }
  return out;
}

GroupBatch SplitPositivesIndividually(const TestHistory& history,
                                      const GroupBatch& pending) {
  const auto emitted = Emitted(history, pending);
  std::set<uint32_t> flagged;
  for (size_t t = 0; t < history.size(); ++t) {
    if (!history.outcomes[t]) continue;
    for (uint32_t i : history.groups[t].members()) flagged.insert(i);
  }
  GroupBatch out;
  for (uint32_t i : flagged) {
    Group single{i};
    if (!emitted.contains(single)) out.push_back(std::move(single));
  }
  return out;
}

GroupBatch BinarySplitPositives(const TestHistory& history,
                                const GroupBatch& pending) {
  auto emitted = Emitted(history, pending);
  GroupBatch out;
  for (size_t t = 0; t < history.size(); ++t) {
    const Group& g = history.groups[t];
    if (!history.outcomes[t] || g.size() < 2) continue;
    const auto members = g.members();
    const size_t half = (members.size() + 1) / 2;
    Group left(std::vector<uint32_t>(members.begin(), members.begin() + half));
    Group right(std::vector<uint32_t>(members.begin() + half, members.end()));
    if (emitted.contains(left) || emitted.contains(right)) continue;
    emitted.insert(left);
    emitted.insert(right);
    out.push_back(std::move(left));
    out.push_back(std::move(right));
  }
  return out;
}

size_t MtGroupSize(double q, const NoiseModel& noise, size_t max_group_size) {
  if (!(q > 0.0 && q < 1.0)) ThrowInvalidArgument("q must lie in (0, 1)");
  const double s = noise.sensitivity(1);
  if (!(s > 0.5)) {
    ThrowConfiguration("random groups need sensitivity above 1/2");
  }
  const double g = std::log((s - 0.5) / noise.rho(1)) / std::log1p(-q);
  const double capped = std::min(static_cast<double>(max_group_size),
                                 std::floor(g));
  return static_cast<size_t>(std::max(1.0, capped));
}

GroupBatch MtRandomGroups(size_t n, double q, const NoiseModel& noise,
                          size_t max_group_size, size_t count, Rng& rng) {
  const size_t g = std::min(n, MtGroupSize(q, noise, max_group_size));
  GroupBatch out;
  std::vector<uint32_t> pool(n);
  for (size_t d = 0; d < count; ++d) {
    std::iota(pool.begin(), pool.end(), 0u);
    for (size_t i = 0; i < g; ++i) {
      const size_t j = i + rng.UniformIndex(n - i);
      std::swap(pool[i], pool[j]);
    }
    out.emplace_back(std::vector<uint32_t>(pool.begin(), pool.begin() + g));
  }
  return out;
}

double InformativeDorfmanCost(std::span<const double> sorted, size_t c,
                              const NoiseModel& noise) {
  if (c == 1) return 1.0;
  double all_negative = 1.0;
  for (size_t u = 0; u < c; ++u) all_negative *= 1.0 - sorted[u];
  const double s = noise.sensitivity(c);
  const double sp = noise.specificity(c);
  const double cd = static_cast<double>(c);
  return (1.0 + cd * (s + (1.0 - s - sp) * all_negative)) / cd;
}

GroupBatch InformativeDorfman(std::span<const double> marginal,
                              const NoiseModel& noise, size_t max_group_size) {
  const size_t n = marginal.size();
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    return marginal[a] < marginal[b];
  });
  std::vector<double> sorted(n);
  for (size_t i = 0; i < n; ++i) sorted[i] = marginal[order[i]];

  const size_t cap = std::min(max_group_size, noise.max_group_size());
  GroupBatch out;
  for (size_t start = 0; start < n;) {
    const size_t limit = std::min(cap, n - start);
    std::span<const double> rest(sorted.data() + start, n - start);
    size_t best = 1;
    double best_cost = InformativeDorfmanCost(rest, 1, noise);
    for (size_t c = 2; c <= limit; ++c) {
      const double cost = InformativeDorfmanCost(rest, c, noise);
      if (cost < best_cost) {
        best_cost = cost;
        best = c;
      }
    }
    out.emplace_back(std::vector<uint32_t>(order.begin() + start,
                                           order.begin() + start + best));
    start += best;
  }
  return out;
}

FixedAssay FixedAssay::Parse(std::string_view text, size_t n,
                             size_t max_group_size) {
  GroupBatch groups;
  size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{}
                                         : text.substr(eol + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    std::vector<uint32_t> members;
    while (true) {
      const auto comma = line.find(',');
      const auto field = Trim(line.substr(0, comma));
      uint32_t value = 0;
      auto [ptr, ec] =
          std::from_chars(field.data(), field.data() + field.size(), value);
      if (field.empty() || ec != std::errc() ||
          ptr != field.data() + field.size()) {
        ThrowConfiguration("assay line " + std::to_string(line_no) +
                           ": bad index '" + std::string(field) + "'");
      }
      members.push_back(value);
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    try {
      Group g(std::move(members));
      g.Validate(n, max_group_size);
      groups.push_back(std::move(g));
    } catch (const Error& e) {
      ThrowConfiguration("assay line " + std::to_string(line_no) + ": " +
                         e.what());
    }
  }
  return FixedAssay(std::move(groups));
}

FixedAssay FixedAssay::Load(const std::string& path, size_t n,
                            size_t max_group_size) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open assay file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str(), n, max_group_size);
}

GroupBatch FixedAssay::Slice(size_t cursor, size_t d) const {
  if (cursor >= groups_.size()) return {};
  const size_t end = std::min(groups_.size(), cursor + d);
  return GroupBatch(groups_.begin() + static_cast<ptrdiff_t>(cursor),
                    groups_.begin() + static_cast<ptrdiff_t>(end));
}

const char* SelectorName(SelectorKind kind) {
  switch (kind) {
    case SelectorKind::kIndividual: return "individual";
    case SelectorKind::kDorfman: return "dorfman";
    case SelectorKind::kSplitPositives: return "split_positives";
    case SelectorKind::kBinarySplit: return "binary_split";
    case SelectorKind::kRandom: return "random";
    case SelectorKind::kFixedAssay: return "fixed_assay";
    case SelectorKind::kInformativeDorfman: return "informative_dorfman";
    case SelectorKind::kMiMax: return "g_mimax";
    case SelectorKind::kAucMax: return "g_aucmax";
  }
  return "unknown";
}

PolicySpec PolicySpec::Named(std::string_view name) {
  using K = SelectorKind;
  PolicySpec spec{std::string(name), {}};
  constexpr size_t kOrigamiTests = 22;
  if (name == "individual") {
    spec.stages = {{K::kIndividual, 1, 0}};
  } else if (name == "dorfman") {
    spec.stages = {{K::kDorfman, 1, 0}, {K::kSplitPositives, 0, 0}};
  } else if (name == "binary_dorfman") {
    spec.stages = {{K::kDorfman, 1, 0}, {K::kBinarySplit, 0, 0}};
  } else if (name == "random") {
    spec.stages = {{K::kRandom, 0, 0}};
  } else if (name == "random_id") {
    spec.stages = {{K::kRandom, 1, 0}, {K::kInformativeDorfman, 0, 0}};
  } else if (name == "origami_id") {
    spec.stages = {{K::kFixedAssay, 0, kOrigamiTests},
                   {K::kInformativeDorfman, 0, 0}};
  } else if (name == "origami_random") {
    spec.stages = {{K::kFixedAssay, 0, kOrigamiTests}, {K::kRandom, 0, 0}};
  } else if (name == "g_mimax") {
    spec.stages = {{K::kMiMax, 0, 0}};
  } else if (name == "g_aucmax") {
    spec.stages = {{K::kAucMax, 0, 0}};
  } else {
    ThrowConfiguration("unknown policy '" + std::string(name) + "'");
  }
  return spec;
}

std::vector<std::string> PolicySpec::Names() {
  return {"individual", "dorfman",    "binary_dorfman",
          "random",     "random_id",  "origami_id",
          "origami_random", "g_mimax", "g_aucmax"};
}

bool PolicySpec::NeedsPosterior() const {
  return std::any_of(stages.begin(), stages.end(), [](const StageSpec& s) {
    return s.kind == SelectorKind::kMiMax || s.kind == SelectorKind::kAucMax;
  });
}

bool PolicySpec::NeedsAssay() const {
  return std::any_of(stages.begin(), stages.end(), [](const StageSpec& s) {
    return s.kind == SelectorKind::kFixedAssay;
  });
}

bool Policy::StageFinished(const SelectorContext& context) const {
  const StageSpec& stage = spec_.stages[stage_];
  if (stage.max_calls && calls_ >= stage.max_calls) return true;
  if (stage.until_tests && produced_ >= stage.until_tests) return true;
  if (stage.kind == SelectorKind::kFixedAssay) {
    return context.assay == nullptr || assay_cursor_ >= context.assay->size();
  }
  return false;
}

GroupBatch Policy::Select(const StageSpec& stage, size_t budget,
                          const SelectorContext& context) {
  const size_t n = context.prior->size();
  const double q = context.prior->MeanRate();
  const NoiseModel& noise = *context.noise;
  const size_t cap = context.max_group_size;
  switch (stage.kind) {
    case SelectorKind::kIndividual: {
      GroupBatch out;
      for (uint32_t i = 0; i < n; ++i) out.push_back(Group{i});
      return out;
    }
    case SelectorKind::kDorfman:
      return DorfmanSplit(n, q, cap);
    case SelectorKind::kSplitPositives:
      return SplitPositivesIndividually(*context.history, pending_);
    case SelectorKind::kBinarySplit:
      return BinarySplitPositives(*context.history, pending_);
    case SelectorKind::kRandom:
      return MtRandomGroups(n, q, noise, cap, budget, *context.rng);
    case SelectorKind::kFixedAssay: {
      auto out = context.assay->Slice(assay_cursor_, budget);
      assay_cursor_ += out.size();
      return out;
    }
    case SelectorKind::kInformativeDorfman:
      return InformativeDorfman(*context.marginal, noise, cap);
    case SelectorKind::kMiMax:
    case SelectorKind::kAucMax: {
      if (context.posterior == nullptr) {
        throw Error(ErrorCode::kInternal, "selector needs a posterior");
      }
      GreedyConfig config;
      config.num_groups = budget;
      config.max_group_size = cap;
      if (stage.kind == SelectorKind::kMiMax) {
        return GreedyMiMax(*context.posterior, noise, config).batch;
      }
      return GreedyGeneric(*context.posterior, noise, config, ExpectedAucPhi())
          .batch;
    }
  }
  return {};
}

GroupBatch Policy::Step(size_t budget, const SelectorContext& context) {
  if (budget < 1) ThrowInvalidArgument("budget must be >= 1");
  // One selector call per stage and step: a second call would see the same
  // history and repeat itself.
  bool called = false;
  while (pending_.size() < budget && stage_ < spec_.stages.size()) {
    if (StageFinished(context)) {
      ++stage_;
      calls_ = 0;
      called = false;
      continue;
    }
    if (called) break;
    GroupBatch fresh =
        Select(spec_.stages[stage_], budget - pending_.size(), context);
    ++calls_;
    called = true;
    produced_ += fresh.size();
    pending_.insert(pending_.end(), std::make_move_iterator(fresh.begin()),
                    std::make_move_iterator(fresh.end()));
  }
  const size_t r = std::min(budget, pending_.size());
  GroupBatch out(std::make_move_iterator(pending_.begin()),
                 std::make_move_iterator(pending_.begin() + r));
  pending_.erase(pending_.begin(), pending_.begin() + r);
  return out;
}

}  // namespace gtboed
