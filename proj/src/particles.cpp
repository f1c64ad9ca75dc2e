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

#include "gtboed/particles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "gtboed/error.hpp"

namespace gtboed {

ParticleCloud::ParticleCloud(size_t population, size_t count)
    : population_(population),
      count_(count),
      words_(WordsFor(population)),
      bits_(count * WordsFor(population), 0) {
  if (population == 0 || population > kMaxPopulation) {
    ThrowInvalidArgument("particle population must be in 1.." +
                         std::to_string(kMaxPopulation));
  }
}

StateVector ParticleCloud::State(size_t i) const {
  return StateVector::FromWords(population_, particle(i));
}

void ParticleCloud::SetState(size_t i, const StateVector& x) {
  if (x.size() != population_) {
    ThrowInvalidArgument("state size does not match particle population");
  }
  std::copy(x.words().begin(), x.words().end(), mutable_particle(i).begin());
}

ParticleCloud ParticleCloud::Replicate(std::span<const uint32_t> counts) const {
  size_t total = 0;
  for (uint32_t c : counts) total += c;
  ParticleCloud out(population_, total);
  size_t dst = 0;
  for (size_t i = 0; i < counts.size(); ++i) {
    for (uint32_t c = 0; c < counts[i]; ++c, ++dst) {
      std::copy_n(bits_.begin() + i * words_, words_,
                  out.bits_.begin() + dst * words_);
    }
  }
  return out;
}

ParticlePosterior::ParticlePosterior(ParticleCloud particles,
                                     std::vector<double> weights)
    : ParticlePosterior(std::move(particles), std::move(weights), true) {}

ParticlePosterior ParticlePosterior::WithStoredWeights(
    ParticleCloud particles, std::vector<double> weights) {
  return ParticlePosterior(std::move(particles), std::move(weights), false);
}

ParticlePosterior::ParticlePosterior(ParticleCloud particles,
                                     std::vector<double> weights,
                                     bool normalize)
    : particles_(std::move(particles)), weights_(std::move(weights)) {
  if (particles_.size() == 0) ThrowInvalidArgument("posterior needs particles");
  if (weights_.size() != particles_.size()) {
    ThrowInvalidArgument("weight count does not match particle count");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      ThrowInvalidArgument("weights must be finite and non-negative");
    }
    total += w;
  }
  if (!(total > 0.0)) ThrowInvalidArgument("weights sum to zero");
  if (!normalize) {
    if (std::abs(total - 1.0) > 1e-9) ThrowInvalidArgument("weights must sum to one");
    return;
  }
  for (double& w : weights_) w /= total;
}

ParticlePosterior ParticlePosterior::SampleFromPrior(const Prior& prior,
                                                     size_t count, Rng& rng) {
  if (count == 0) ThrowInvalidArgument("need at least one particle");
  ParticleCloud cloud(prior.size(), count);
  for (size_t i = 0; i < count; ++i) {
    auto words = cloud.mutable_particle(i);
    for (size_t j = 0; j < prior.size(); ++j) {
      if (rng.Bernoulli(prior.rates[j])) {
        words[j >> 6] |= uint64_t{1} << (j & 63);
      }
    }
  }
  return ParticlePosterior(std::move(cloud),
                           std::vector<double>(count, 1.0 / count));
}

std::vector<double> ParticlePosterior::Marginal() const {
  std::vector<double> m(population(), 0.0);
  double total = 0.0;
  for (size_t i = 0; i < size(); ++i) {
    const double w = weights_[i];
    if (w == 0.0) continue;
    total += w;
    auto words = particles_.particle(i);
    for (size_t k = 0; k < words.size(); ++k) {
      uint64_t bits = words[k];
      while (bits) {
        const int b = std::countr_zero(bits);
        m[k * 64 + b] += w;
        bits &= bits - 1;
      }
    }
  }
  for (double& v : m) v /= total;
  return m;
}

double Ess(std::span<const double> weights) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double w : weights) {
    sum += w;
    sum_sq += w * w;
  }
  if (!(sum_sq > 0.0)) return 0.0;
  return sum * sum / (static_cast<double>(weights.size()) * sum_sq);
}

std::vector<double> Reweight(std::span<const double> weights,
                             std::span<const double> loglik, double delta) {
  if (weights.size() != loglik.size()) {
    ThrowInvalidArgument("weights and log-likelihoods differ in length");
  }
  const size_t n = weights.size();
  std::vector<double> out(n);
  if (delta == 0.0) {
    std::copy(weights.begin(), weights.end(), out.begin());
  } else {
    double max_log = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) {
      const double lw = weights[i] > 0.0 && loglik[i] > -INFINITY
                            ? std::log(weights[i]) + delta * loglik[i]
                            : -std::numeric_limits<double>::infinity();
      out[i] = lw;
      max_log = std::max(max_log, lw);
    }
    if (max_log == -std::numeric_limits<double>::infinity()) {
      throw Error(ErrorCode::kDegenerateEvidence,
                  "every particle has zero likelihood under the new tests");
    }
    for (double& v : out) v = std::exp(v - max_log);
  }
  double total = 0.0;
  for (double v : out) total += v;
  for (double& v : out) v /= total;
  return out;
}

double EssAfterReweight(std::span<const double> weights,
                        std::span<const double> loglik, double delta) {
  return Ess(Reweight(weights, loglik, delta));
}

double NextTemperature(double gamma, std::span<const double> weights,
                       std::span<const double> loglik,
                       const TemperingOptions& options) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    ThrowInvalidArgument("current temperature must lie in [0, 1)");
  }
  const double span = 1.0 - gamma;
  if (EssAfterReweight(weights, loglik, span) >= options.target_ess) {
    return 1.0;
  }
  double lo = 0.0;
  double hi = span;
  for (int it = 0; it < options.max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double ess = EssAfterReweight(weights, loglik, mid);
    if (std::abs(ess - options.target_ess) <= options.tolerance) {
      return gamma + mid;
    }
    if (ess < options.target_ess) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return gamma + (lo > 0.0 ? lo : hi);
}

std::vector<uint32_t> SystematicResample(std::span<const double> weights,
                                         double u) {
  const size_t n = weights.size();
  std::vector<uint32_t> counts(n, 0);
  double cumulative = 0.0;
  size_t m = 0;
  size_t last_positive = 0;
  for (size_t i = 0; i < n && m < n; ++i) {
    if (weights[i] > 0.0) last_positive = i;
    cumulative += weights[i];
    const double threshold = cumulative * static_cast<double>(n);
    while (m < n && u + static_cast<double>(m) < threshold) {
      ++counts[i];
      ++m;
    }
  }
  // Rounding can leave the final position uncovered.
  if (m < n) {
    for (size_t i = n; i-- > 0;) {
      if (weights[i] > 0.0) {
        last_positive = i;
        break;
      }
    }
    counts[last_positive] += static_cast<uint32_t>(n - m);
  }
  return counts;
}

std::vector<uint32_t> SystematicResample(std::span<const double> weights,
                                         Rng& rng) {
  return SystematicResample(weights, rng.Uniform());
}

}  // namespace gtboed
