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

#include "gtboed/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "gtboed/error.hpp"

namespace gtboed {
namespace {

// Lowest index whose score is within the tolerance of the maximum.
size_t ArgMax(const std::vector<double>& scores) {
  const double best = *std::max_element(scores.begin(), scores.end());
  for (size_t u = 0; u < scores.size(); ++u) {
    if (scores[u] >= best - kImprovementTolerance) return u;
  }
  return 0;
}

// Scores group edits relative to the accepted groups plus the group under
// construction. Implementations hold the current group themselves.
class Scorer {
 public:
  virtual ~Scorer() = default;
  // Utility of the accepted groups alone.
  virtual double Baseline() = 0;
  // Utility with `candidates[u]` added to the current group.
  virtual void ScoreAdds(const std::vector<uint32_t>& candidates,
                         std::vector<double>& out) = 0;
  // Utility with `members[u]` removed from the current group.
  virtual void ScoreRemovals(const std::vector<uint32_t>& members,
                             std::vector<double>& out) = 0;
  virtual void Add(uint32_t individual) = 0;
  virtual void Remove(uint32_t individual) = 0;
  virtual void Commit() = 0;
};

GreedyResult RunGreedy(Scorer& scorer, size_t population,
                       const GreedyConfig& config) {
  GreedyResult result;
  const size_t cap = std::min(config.max_group_size, population);
  const size_t groups = std::min(config.num_groups, kMaxBatchSize);
  std::vector<double> scores;
  for (size_t j = 0; j < groups; ++j) {
    double current = scorer.Baseline();
    std::vector<uint32_t> members;
    while (true) {
      int adds = 0;
      for (; adds < config.forward_steps && members.size() < cap; ++adds) {
        std::vector<uint32_t> candidates;
        for (uint32_t u = 0; u < population; ++u) {
          if (!std::binary_search(members.begin(), members.end(), u)) {
            candidates.push_back(u);
          }
        }
        scores.assign(candidates.size(), 0.0);
        scorer.ScoreAdds(candidates, scores);
        const size_t best = ArgMax(scores);
        if (!(scores[best] > current + kImprovementTolerance)) break;
        current = scores[best];
        scorer.Add(candidates[best]);
        members.insert(
            std::upper_bound(members.begin(), members.end(), candidates[best]),
            candidates[best]);
      }
      int removals = 0;
      if (adds >= 2) {
        for (; removals < config.backward_steps && members.size() > 1;
             ++removals) {
          scores.assign(members.size(), 0.0);
          scorer.ScoreRemovals(members, scores);
          const size_t best = ArgMax(scores);
          if (!(scores[best] > current + kImprovementTolerance)) break;
          current = scores[best];
          scorer.Remove(members[best]);
          members.erase(members.begin() + static_cast<ptrdiff_t>(best));
        }
      }
      if (removals == 0 && adds < config.forward_steps) break;
    }
    if (members.empty()) break;
    scorer.Commit();
    result.batch.emplace_back(std::move(members));
    result.utilities.push_back(current);
  }
  return result;
}

class IncrementalMiState final : public Scorer {
 public:
  IncrementalMiState(const ParticlePosterior& posterior,
                     const NoiseModel& noise)
      : cloud_(posterior.particles()),
        weights_(posterior.weights()),
        noise_(noise),
        pattern_(cloud_.size(), 0),
        count_(cloud_.size(), 0),
        mask_(cloud_.words_per_particle(), 0) {}

  double Baseline() override { return baseline_; }

  void ScoreAdds(const std::vector<uint32_t>& candidates,
                 std::vector<double>& out) override {
    const size_t patterns = size_t{1} << accepted_;
    std::vector<int32_t> slot(cloud_.population(), -1);
    for (size_t u = 0; u < candidates.size(); ++u) {
      slot[candidates[u]] = static_cast<int32_t>(u);
    }
    std::vector<double> added(candidates.size() * patterns, 0.0);
    for (size_t v = 0; v < cloud_.size(); ++v) {
      if (count_[v] > 0 || weights_[v] == 0.0) continue;
      auto x = cloud_.particle(v);
      for (size_t w = 0; w < x.size(); ++w) {
        uint64_t bits = x[w];
        while (bits) {
          const int32_t s = slot[w * 64 + std::countr_zero(bits)];
          if (s >= 0) added[s * patterns + pattern_[v]] += weights_[v];
          bits &= bits - 1;
        }
      }
    }
    const auto base = PositiveMass();
    const auto total = ChannelTotal();
    for (size_t u = 0; u < candidates.size(); ++u) {
      std::vector<double> positive(base);
      for (size_t b = 0; b < patterns; ++b) {
        positive[b] += added[u * patterns + b];
      }
      out[u] = Score(total, std::move(positive), size_ + 1);
    }
  }

  void ScoreRemovals(const std::vector<uint32_t>& members,
                     std::vector<double>& out) override {
    const size_t patterns = size_t{1} << accepted_;
    std::vector<double> lost(members.size() * patterns, 0.0);
    for (size_t v = 0; v < cloud_.size(); ++v) {
      if (count_[v] != 1 || weights_[v] == 0.0) continue;
      auto x = cloud_.particle(v);
      for (size_t w = 0; w < x.size(); ++w) {
        const uint64_t hit = x[w] & mask_[w];
        if (!hit) continue;
        const uint32_t u = static_cast<uint32_t>(w * 64 + std::countr_zero(hit));
        const size_t s = std::lower_bound(members.begin(), members.end(), u) -
                         members.begin();
        lost[s * patterns + pattern_[v]] += weights_[v];
        break;
      }
    }
    const auto base = PositiveMass();
    const auto total = ChannelTotal();
    for (size_t u = 0; u < members.size(); ++u) {
      std::vector<double> positive(base);
      for (size_t b = 0; b < patterns; ++b) {
        positive[b] -= lost[u * patterns + b];
      }
      out[u] = Score(total, std::move(positive), size_ - 1);
    }
  }

  void Add(uint32_t individual) override { Toggle(individual, true); }
  void Remove(uint32_t individual) override { Toggle(individual, false); }

  void Commit() override {
    double f = 0.0;
    for (size_t v = 0; v < cloud_.size(); ++v) {
      if (count_[v] > 0) {
        pattern_[v] |= uint32_t{1} << accepted_;
        f += weights_[v];
      }
    }
    const double sp = noise_.specificity(size_);
    const double se = noise_.sensitivity(size_);
    conditional_ += BinaryEntropy(sp) +
                    (BinaryEntropy(se) - BinaryEntropy(sp)) * f;
    specificity_.push_back(sp);
    sensitivity_.push_back(se);
    ++accepted_;
    std::vector<double> dist(size_t{1} << accepted_, 0.0);
    for (size_t v = 0; v < cloud_.size(); ++v) dist[pattern_[v]] += weights_[v];
    ApplyTestChannel(dist, specificity_, sensitivity_);
    double h = 0.0;
    for (double p : dist) {
      if (p > 0.0) h -= p * std::log(p);
    }
    baseline_ = h - conditional_;
    std::fill(count_.begin(), count_.end(), 0);
    std::fill(mask_.begin(), mask_.end(), 0);
    size_ = 0;
  }

 private:
  // Weight of particles positive in the current group, by pattern.
  std::vector<double> PositiveMass() const {
    std::vector<double> out(size_t{1} << accepted_, 0.0);
    for (size_t v = 0; v < cloud_.size(); ++v) {
      if (count_[v] > 0) out[pattern_[v]] += weights_[v];
    }
    return out;
  }

  // Pattern weights pushed through the accepted groups' channels.
  std::vector<double> ChannelTotal() const {
    std::vector<double> total(size_t{1} << accepted_, 0.0);
    for (size_t v = 0; v < cloud_.size(); ++v) total[pattern_[v]] += weights_[v];
    ApplyTestChannel(total, specificity_, sensitivity_);
    return total;
  }

  // MI of the accepted groups plus a group of size g whose positive
  // particles carry `positive` weight per pattern.
  double Score(const std::vector<double>& total, std::vector<double> positive,
               size_t g) const {
    if (g == 0) return baseline_;
    const size_t patterns = size_t{1} << accepted_;
    double f = 0.0;
    for (double p : positive) f += p;
    ApplyTestChannel(positive, specificity_, sensitivity_);
    const double sp = noise_.specificity(g);
    const double se = noise_.sensitivity(g);
    const double rho = sp + se - 1.0;
    double h = 0.0;
    for (size_t b = 0; b < patterns; ++b) {
      const double q1 = std::max((1.0 - sp) * total[b] + rho * positive[b], 0.0);
      const double q0 = std::max(sp * total[b] - rho * positive[b], 0.0);
      if (q1 > 0.0) h -= q1 * std::log(q1);
      if (q0 > 0.0) h -= q0 * std::log(q0);
    }
    const double gamma = BinaryEntropy(se) - BinaryEntropy(sp);
    return h - (conditional_ + BinaryEntropy(sp) + gamma * f);
  }

  void Toggle(uint32_t individual, bool add) {
    const size_t w = individual >> 6;
    const uint64_t bit = uint64_t{1} << (individual & 63);
    for (size_t v = 0; v < cloud_.size(); ++v) {
      if (cloud_.particle(v)[w] & bit) {
        count_[v] = static_cast<uint16_t>(add ? count_[v] + 1 : count_[v] - 1);
      }
    }
    if (add) {
      mask_[w] |= bit;
      ++size_;
    } else {
      mask_[w] &= ~bit;
      --size_;
    }
  }

  const ParticleCloud& cloud_;
  std::span<const double> weights_;
  const NoiseModel& noise_;
  std::vector<uint32_t> pattern_;
  size_t accepted_ = 0;
  std::vector<double> specificity_;
  std::vector<double> sensitivity_;
  double conditional_ = 0.0;
  double baseline_ = 0.0;
  std::vector<uint16_t> count_;
  std::vector<uint64_t> mask_;
  size_t size_ = 0;
};

class GenericScorer final : public Scorer {
 public:
  GenericScorer(const ParticlePosterior& posterior, const NoiseModel& noise,
                const UtilityFunctional& phi)
      : posterior_(posterior), noise_(noise), phi_(phi) {}

  double Baseline() override {
    return ExpectedUtility(posterior_, accepted_, noise_, phi_);
  }

  void ScoreAdds(const std::vector<uint32_t>& candidates,
                 std::vector<double>& out) override {
    for (size_t u = 0; u < candidates.size(); ++u) {
      std::vector<uint32_t> members = current_;
      members.push_back(candidates[u]);
      out[u] = Evaluate(std::move(members));
    }
  }

  void ScoreRemovals(const std::vector<uint32_t>& members,
                     std::vector<double>& out) override {
    for (size_t u = 0; u < members.size(); ++u) {
      std::vector<uint32_t> rest;
      for (uint32_t m : current_) {
        if (m != members[u]) rest.push_back(m);
      }
      out[u] = Evaluate(std::move(rest));
    }
  }

  void Add(uint32_t individual) override { current_.push_back(individual); }
  void Remove(uint32_t individual) override {
    current_.erase(std::find(current_.begin(), current_.end(), individual));
  }
  void Commit() override {
    accepted_.emplace_back(current_);
    current_.clear();
  }

 private:
  double Evaluate(std::vector<uint32_t> members) {
    if (members.empty()) return Baseline();
    GroupBatch batch = accepted_;
    batch.emplace_back(std::move(members));
    return ExpectedUtility(posterior_, batch, noise_, phi_);
  }

  const ParticlePosterior& posterior_;
  const NoiseModel& noise_;
  const UtilityFunctional& phi_;
  GroupBatch accepted_;
  std::vector<uint32_t> current_;
};

void CheckInputs(const ParticlePosterior& posterior, const NoiseModel& noise,
                 const GreedyConfig& config) {
  config.Validate();
  if (config.max_group_size > noise.max_group_size()) {
    ThrowConfiguration("max_group_size exceeds the noise table");
  }
  if (posterior.size() == 0) ThrowInvalidArgument("posterior has no particles");
}

}  // namespace

void GreedyConfig::Validate() const {
  if (num_groups < 1) ThrowConfiguration("num_groups must be >= 1");
  if (max_group_size < 1) ThrowConfiguration("max_group_size must be >= 1");
  if (backward_steps < 0 || forward_steps <= backward_steps) {
    ThrowConfiguration("need forward_steps > backward_steps >= 0");
  }
}

GreedyResult GreedyMiMax(const ParticlePosterior& posterior,
                         const NoiseModel& noise, const GreedyConfig& config) {
  CheckInputs(posterior, noise, config);
  IncrementalMiState state(posterior, noise);
  return RunGreedy(state, posterior.population(), config);
}

GreedyResult GreedyGeneric(const ParticlePosterior& posterior,
                           const NoiseModel& noise, const GreedyConfig& config,
                           const UtilityFunctional& phi) {
  CheckInputs(posterior, noise, config);
  GenericScorer scorer(posterior, noise, phi);
  return RunGreedy(scorer, posterior.population(), config);
}

}  // namespace gtboed
