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

#include "gtboed/utility.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "gtboed/error.hpp"

namespace gtboed {
namespace {

constexpr double kNegligibleOutcome = 1e-300;

void CheckBatch(const ParticlePosterior& posterior, const GroupBatch& batch,
                const NoiseModel& noise) {
  if (batch.size() > kMaxBatchSize) {
    ThrowInvalidArgument("batch has more than 12 groups");
  }
  for (const Group& g : batch) {
    g.Validate(posterior.population(), noise.max_group_size());
  }
}

double XLogX(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

// Midranks (1-based) of `scores`.
std::vector<double> MidRanks(std::span<const double> scores) {
  const size_t n = scores.size();
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](uint32_t a, uint32_t b) { return scores[a] < scores[b]; });
  std::vector<double> ranks(n);
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t t = i; t <= j; ++t) ranks[order[t]] = mid;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> AucFromRanks(std::span<const double> ranks,
                                   std::span<const uint64_t> x) {
  const size_t n = ranks.size();
  double rank_sum = 0.0;
  size_t positives = 0;
  for (size_t w = 0; w < x.size(); ++w) {
    uint64_t bits = x[w];
    while (bits) {
      rank_sum += ranks[w * 64 + std::countr_zero(bits)];
      ++positives;
      bits &= bits - 1;
    }
  }
  if (positives == 0 || positives == n) return std::nullopt;
  const double p = static_cast<double>(positives);
  const double q = static_cast<double>(n - positives);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

std::vector<double> GroupChannel(const GroupBatch& batch,
                                 const NoiseModel& noise, bool sensitivity) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const Group& g : batch) {
    out.push_back(sensitivity ? noise.sensitivity(g.size())
                              : noise.specificity(g.size()));
  }
  return out;
}

}  // namespace

UtilityFunctional NegEntropyPhi() {
  return {"neg_entropy",
          [](std::span<const double> weights, const ParticleCloud&) {
            return -WeightEntropy(weights);
          }};
}

UtilityFunctional ExpectedAucPhi() {
  return {"expected_auc", [](std::span<const double> weights,
                             const ParticleCloud& particles) {
            const size_t n = particles.population();
            std::vector<double> marginal(n, 0.0);
            for (size_t v = 0; v < particles.size(); ++v) {
              if (weights[v] == 0.0) continue;
              auto x = particles.particle(v);
              for (size_t w = 0; w < x.size(); ++w) {
                uint64_t bits = x[w];
                while (bits) {
                  marginal[w * 64 + std::countr_zero(bits)] += weights[v];
                  bits &= bits - 1;
                }
              }
            }
            const auto ranks = MidRanks(marginal);
            double total = 0.0;
            double mass = 0.0;
            for (size_t v = 0; v < particles.size(); ++v) {
              if (weights[v] == 0.0) continue;
              if (auto auc = AucFromRanks(ranks, particles.particle(v))) {
                total += weights[v] * *auc;
                mass += weights[v];
              }
            }
            return mass > 0.0 ? total / mass : 0.5;
          }};
}

double WeightEntropy(std::span<const double> weights) {
  double h = 0.0;
  for (double w : weights) h -= XLogX(w);
  return h;
}

std::optional<double> Auc(std::span<const double> scores,
                          const StateVector& x) {
  if (scores.size() != x.size()) {
    ThrowInvalidArgument("score vector and state differ in length");
  }
  const auto ranks = MidRanks(scores);
  return AucFromRanks(ranks, x.words());
}

void ApplyTestChannel(std::span<double> values,
                      std::span<const double> specificity,
                      std::span<const double> sensitivity) {
  const size_t k = specificity.size();
  if (values.size() != (size_t{1} << k) || sensitivity.size() != k) {
    ThrowInvalidArgument("channel dimensions do not match");
  }
  for (size_t t = 0; t < k; ++t) {
    const size_t bit = size_t{1} << t;
    const double sp = specificity[t];
    const double se = sensitivity[t];
    for (size_t i = 0; i < values.size(); ++i) {
      if (i & bit) continue;
      const double healthy = values[i];
      const double infected = values[i | bit];
      values[i] = sp * healthy + (1.0 - se) * infected;
      values[i | bit] = (1.0 - sp) * healthy + se * infected;
    }
  }
}

std::vector<uint32_t> StatusPatterns(const ParticleCloud& particles,
                                     const GroupBatch& batch) {
  const size_t n = particles.population();
  std::vector<std::vector<uint64_t>> masks;
  masks.reserve(batch.size());
  for (const Group& g : batch) masks.push_back(g.Mask(n));
  std::vector<uint32_t> patterns(particles.size(), 0);
  for (size_t v = 0; v < particles.size(); ++v) {
    auto x = particles.particle(v);
    uint32_t pattern = 0;
    for (size_t t = 0; t < masks.size(); ++t) {
      for (size_t w = 0; w < x.size(); ++w) {
        if (x[w] & masks[t][w]) {
          pattern |= uint32_t{1} << t;
          break;
        }
      }
    }
    patterns[v] = pattern;
  }
  return patterns;
}

double ExpectedUtility(const ParticlePosterior& posterior,
                       const GroupBatch& batch, const NoiseModel& noise,
                       const UtilityFunctional& phi) {
  CheckBatch(posterior, batch, noise);
  const auto& cloud = posterior.particles();
  const auto weights = posterior.weights();
  const size_t k = batch.size();
  const size_t outcomes = size_t{1} << k;
  const auto patterns = StatusPatterns(cloud, batch);
  const auto sp = GroupChannel(batch, noise, false);
  const auto se = GroupChannel(batch, noise, true);

  // likelihood[y * 2^k + pattern] = P(Y = y | status pattern).
  std::vector<double> likelihood(outcomes * outcomes);
  for (size_t pattern = 0; pattern < outcomes; ++pattern) {
    for (size_t y = 0; y < outcomes; ++y) {
      double p = 1.0;
      for (size_t t = 0; t < k; ++t) {
        const bool status = (pattern >> t) & 1u;
        const bool result = (y >> t) & 1u;
        const double positive = status ? se[t] : 1.0 - sp[t];
        p *= result ? positive : 1.0 - positive;
      }
      likelihood[y * outcomes + pattern] = p;
    }
  }

  std::vector<double> conditional(cloud.size());
  double utility = 0.0;
  for (size_t y = 0; y < outcomes; ++y) {
    const double* row = likelihood.data() + y * outcomes;
    double d = 0.0;
    for (size_t v = 0; v < cloud.size(); ++v) {
      conditional[v] = weights[v] * row[patterns[v]];
      d += conditional[v];
    }
    if (d < kNegligibleOutcome) continue;
    for (double& c : conditional) c /= d;
    utility += d * phi.eval(conditional, cloud);
  }
  return utility;
}

double MutualInformation(const ParticlePosterior& posterior,
                         const GroupBatch& batch, const NoiseModel& noise) {
  CheckBatch(posterior, batch, noise);
  const size_t k = batch.size();
  if (k == 0) return 0.0;
  const auto patterns = StatusPatterns(posterior.particles(), batch);
  const auto weights = posterior.weights();
  std::vector<double> dist(size_t{1} << k, 0.0);
  std::vector<double> positive_mass(k, 0.0);
  for (size_t v = 0; v < patterns.size(); ++v) {
    dist[patterns[v]] += weights[v];
    for (size_t t = 0; t < k; ++t) {
      if ((patterns[v] >> t) & 1u) positive_mass[t] += weights[v];
    }
  }
  const auto sp = GroupChannel(batch, noise, false);
  const auto se = GroupChannel(batch, noise, true);
  ApplyTestChannel(dist, sp, se);

  double conditional = 0.0;
  for (size_t t = 0; t < k; ++t) {
    const double gamma = BinaryEntropy(se[t]) - BinaryEntropy(sp[t]);
    conditional += BinaryEntropy(sp[t]) + gamma * positive_mass[t];
  }
  double marginal = 0.0;
  for (double p : dist) marginal -= XLogX(std::max(p, 0.0));
  return marginal - conditional;
}

double MutualInformationSingleGroup(double f, double specificity,
                                    double sensitivity) {
  const double rho = specificity + sensitivity - 1.0;
  const double gamma = BinaryEntropy(sensitivity) - BinaryEntropy(specificity);
  return BinaryEntropy(rho * f + 1.0 - specificity) - gamma * f -
         BinaryEntropy(specificity);
}

}  // namespace gtboed
