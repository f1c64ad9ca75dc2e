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

#ifndef GTBOED_TESTS_ORACLES_HPP_
#define GTBOED_TESTS_ORACLES_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "gtboed/core.hpp"
#include "gtboed/decoder.hpp"
#include "gtboed/exact_posterior.hpp"
#include "gtboed/mcmc.hpp"
#include "gtboed/particles.hpp"
#include "gtboed/rng.hpp"
#include "gtboed/utility.hpp"

// Brute-force references built from joint enumeration over states and
// outcomes. Nothing here shares code with the fast paths under test beyond
// the noise model and state containers.
namespace gtboed::oracle {

inline StateVector StateOf(uint32_t s, size_t n) {
  StateVector x(n);
  for (size_t i = 0; i < n; ++i) x.Set(i, (s >> i) & 1u);
  return x;
}

// Normalized probabilities of every state under `posterior`.
inline std::vector<double> Pmf(const ExactPosterior& posterior) {
  std::vector<double> p(posterior.log_mass().size());
  for (size_t s = 0; s < p.size(); ++s) p[s] = posterior.Probability(s);
  return p;
}

// P(Y = y | x) for the outcome vector encoded in the bits of y.
inline double OutcomeProbability(const GroupBatch& batch, uint32_t y,
                                 const StateVector& x, const NoiseModel& noise) {
  double p = 1.0;
  for (size_t t = 0; t < batch.size(); ++t) {
    bool positive = false;
    for (uint32_t i : batch[t].members()) positive = positive || x[i];
    const double p1 = positive ? noise.sensitivity(batch[t].size())
                               : 1.0 - noise.specificity(batch[t].size());
    p *= ((y >> t) & 1u) ? p1 : 1.0 - p1;
  }
  return p;
}

// I(X; Y) by summing p(x) p(y|x) log(p(y|x) / p(y)) over all (x, y).
inline double MutualInformation(const std::vector<double>& pmf, size_t n,
                                const GroupBatch& batch,
                                const NoiseModel& noise) {
  const uint32_t outcomes = 1u << batch.size();
  std::vector<double> py(outcomes, 0.0);
  std::vector<std::vector<double>> cond(pmf.size());
  for (uint32_t s = 0; s < pmf.size(); ++s) {
    const StateVector x = StateOf(s, n);
    cond[s].resize(outcomes);
    for (uint32_t y = 0; y < outcomes; ++y) {
      cond[s][y] = OutcomeProbability(batch, y, x, noise);
      py[y] += pmf[s] * cond[s][y];
    }
  }
  double mi = 0.0;
  for (uint32_t s = 0; s < pmf.size(); ++s) {
    if (pmf[s] == 0.0) continue;
    for (uint32_t y = 0; y < outcomes; ++y) {
      const double c = cond[s][y];
      if (c > 0.0) mi += pmf[s] * c * std::log(c / py[y]);
    }
  }
  return mi;
}

inline double Entropy(const std::vector<double>& pmf) {
  double h = 0.0;
  for (double p : pmf) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

// Pairwise AUC over positive/negative pairs with half credit for ties;
// returns -1 when undefined.
inline double PairwiseAuc(const std::vector<double>& scores,
                          const StateVector& x) {
  double credit = 0.0;
  double pairs = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!x[i]) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (x[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) credit += 1.0;
      if (scores[i] == scores[j]) credit += 0.5;
    }
  }
  return pairs == 0.0 ? -1.0 : credit / pairs;
}

// E_y[ sum_x p(x|y) AUC(m_y, x) ], renormalizing over states with a
// defined AUC and scoring 0.5 when none is.
inline double ExpectedAuc(const std::vector<double>& pmf, size_t n,
                          const GroupBatch& batch, const NoiseModel& noise) {
  const uint32_t outcomes = 1u << batch.size();
  double total = 0.0;
  for (uint32_t y = 0; y < outcomes; ++y) {
    std::vector<double> post(pmf.size());
    double py = 0.0;
    for (uint32_t s = 0; s < pmf.size(); ++s) {
      post[s] = pmf[s] * OutcomeProbability(batch, y, StateOf(s, n), noise);
      py += post[s];
    }
    if (py < 1e-300) continue;
    std::vector<double> m(n, 0.0);
    for (uint32_t s = 0; s < pmf.size(); ++s) {
      post[s] /= py;
      for (size_t i = 0; i < n; ++i) {
        if ((s >> i) & 1u) m[i] += post[s];
      }
    }
    double value = 0.0;
    double defined = 0.0;
    for (uint32_t s = 0; s < pmf.size(); ++s) {
      if (post[s] == 0.0) continue;
      const double auc = PairwiseAuc(m, StateOf(s, n));
      if (auc < 0.0) continue;
      value += post[s] * auc;
      defined += post[s];
    }
    total += py * (defined > 0.0 ? value / defined : 0.5);
  }
  return total;
}

// Every batch of k non-empty groups of size <= max_size over n individuals,
// groups as bitmasks in non-decreasing order.
inline std::vector<GroupBatch> AllBatches(size_t n, size_t k, size_t max_size) {
  if (k == 0) return {GroupBatch{}};
  std::vector<uint32_t> masks;
  for (uint32_t m = 1; m < (1u << n); ++m) {
    if (static_cast<size_t>(std::popcount(m)) <= max_size) masks.push_back(m);
  }
  auto group = [n](uint32_t m) {
    std::vector<uint32_t> members;
    for (uint32_t i = 0; i < n; ++i) {
      if ((m >> i) & 1u) members.push_back(i);
    }
    return Group(std::move(members));
  };
  std::vector<GroupBatch> out;
  std::vector<size_t> idx(k, 0);
  while (true) {
    GroupBatch b;
    for (size_t t = 0; t < k; ++t) b.push_back(group(masks[idx[t]]));
    out.push_back(std::move(b));
    size_t t = k;
    while (t > 0) {
      --t;
      if (idx[t] + 1 < masks.size()) {
        ++idx[t];
        for (size_t u = t + 1; u < k; ++u) idx[u] = idx[t];
        break;
      }
      if (t == 0) return out;
    }
  }
}

// Single-site kernel matrix for coordinate j on 2^n states: stay or flip j
// with FlipProbability of the log target ratio.
inline std::vector<double> SiteKernel(const std::vector<double>& log_target,
                                      size_t n, size_t j, McmcKernel kernel) {
  const size_t states = size_t{1} << n;
  std::vector<double> k(states * states, 0.0);
  for (size_t s = 0; s < states; ++s) {
    const size_t t = s ^ (size_t{1} << j);
    const double p = FlipProbability(kernel, log_target[t] - log_target[s]);
    k[s * states + t] += p;
    k[s * states + s] += 1.0 - p;
  }
  return k;
}

inline std::vector<double> MatMul(const std::vector<double>& a,
                                  const std::vector<double>& b, size_t d) {
  std::vector<double> c(d * d, 0.0);
  for (size_t i = 0; i < d; ++i) {
    for (size_t l = 0; l < d; ++l) {
      const double v = a[i * d + l];
      if (v == 0.0) continue;
      for (size_t j = 0; j < d; ++j) c[i * d + j] += v * b[l * d + j];
    }
  }
  return c;
}

// Transition matrix of one ascending sweep.
inline std::vector<double> SweepMatrix(const std::vector<double>& log_target,
                                       size_t n, McmcKernel kernel) {
  const size_t d = size_t{1} << n;
  std::vector<double> p(d * d, 0.0);
  for (size_t i = 0; i < d; ++i) p[i * d + i] = 1.0;
  for (size_t j = 0; j < n; ++j) {
    p = MatMul(p, SiteKernel(log_target, n, j, kernel), d);
  }
  return p;
}

// Random disjoint or overlapping groups drawn from [0, n).
inline GroupBatch RandomBatch(size_t n, size_t k, size_t max_size, Rng& rng) {
  GroupBatch batch;
  for (size_t t = 0; t < k; ++t) {
    const size_t size = 1 + rng.UniformIndex(std::min(max_size, n));
    std::vector<uint32_t> all(n);
    for (uint32_t i = 0; i < n; ++i) all[i] = i;
    for (size_t i = 0; i < size; ++i) {
      std::swap(all[i], all[i + rng.UniformIndex(n - i)]);
    }
    batch.emplace_back(std::vector<uint32_t>(all.begin(), all.begin() + size));
  }
  return batch;
}

struct DecodeInstance {
  uint64_t seed = 0;
  Prior prior;
  NoiseModel noise;
  TestHistory history;
};

// First instance, scanning seeds upward, of a small population with
// overlapping groups and random outcomes on which LBP still oscillates
// after max_iterations.
inline std::optional<DecodeInstance> FindOscillatingInstance(
    uint64_t max_seed, const LbpOptions& options = {}) {
  for (uint64_t seed = 0; seed < max_seed; ++seed) {
    Rng rng(seed);
    const size_t n = 3 + rng.UniformIndex(4);
    const size_t k = 2 + rng.UniformIndex(4);
    const double sp = 0.9 + 0.1 * rng.Uniform();
    const double se = 0.9 + 0.1 * rng.Uniform();
    const double q = 0.05 + 0.4 * rng.Uniform();
    DecodeInstance inst{seed, Prior::Uniform(n, q),
                        NoiseModel::Constant(sp, se, n), {}};
    const GroupBatch batch = RandomBatch(n, k, 3, rng);
    TestOutcomes y;
    for (size_t t = 0; t < k; ++t) y.push_back(rng.Bernoulli(0.5));
    inst.history.Append(batch, y);
    if (DetectOscillation(LbpDecode(inst.history, inst.noise, inst.prior, options))) {
      return inst;
    }
  }
  return std::nullopt;
}

}  // namespace gtboed::oracle

#endif  // GTBOED_TESTS_ORACLES_HPP_
