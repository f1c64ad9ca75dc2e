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

#include "gtboed/smc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "gtboed/error.hpp"

namespace gtboed {
namespace {

std::string DescribeBatch(const GroupBatch& batch, const TestOutcomes& y) {
  std::ostringstream out;
  for (size_t t = 0; t < batch.size(); ++t) {
    if (t) out << "; ";
    out << '{' << batch[t].ToString() << "}=" << int(y[t]);
  }
  return out.str();
}

}  // namespace

void SmcConfig::Validate() const {
  if (num_particles == 0) ThrowConfiguration("num_particles must be >= 1");
  if (!(target_ess > 1.0 / static_cast<double>(num_particles) &&
        target_ess < 1.0)) {
    ThrowConfiguration("target_ess must lie in (1/N, 1)");
  }
  if (mcmc_sweeps < 0) ThrowConfiguration("mcmc_sweeps must be >= 0");
  if (!(bisection_tolerance > 0.0) || bisection_max_iterations < 1) {
    ThrowConfiguration("bisection settings must be positive");
  }
}

TemperedTarget::TemperedTarget(const Prior& prior, const TestHistory& past,
                               const GroupBatch& batch, const TestOutcomes& y,
                               const NoiseModel& noise) {
  const size_t n = prior.size();
  words_ = WordsFor(n);
  logit_.resize(n);
  for (size_t j = 0; j < n; ++j) {
    logit_[j] = std::log(prior.rates[j]) - std::log1p(-prior.rates[j]);
  }
  auto add_test = [&](const Group& g, bool outcome, bool is_new) {
    g.Validate(n, noise.max_group_size());
    auto mask = g.Mask(n);
    masks_.insert(masks_.end(), mask.begin(), mask.end());
    ll_negative_.push_back(noise.LogLikelihood(g.size(), false, outcome));
    ll_positive_.push_back(noise.LogLikelihood(g.size(), true, outcome));
    is_new_.push_back(is_new ? 1 : 0);
  };
  for (size_t t = 0; t < past.size(); ++t) {
    add_test(past.groups[t], past.outcomes[t] != 0, false);
  }
  if (batch.size() != y.size()) {
    ThrowInvalidArgument("outcome count does not match batch size");
  }
  for (size_t t = 0; t < batch.size(); ++t) add_test(batch[t], y[t] != 0, true);
  if (ll_negative_.size() > UINT16_MAX) {
    ThrowInvalidArgument("too many tests in history");
  }

  std::vector<std::vector<uint32_t>> per_individual(n);
  const size_t num_tests = ll_negative_.size();
  for (size_t t = 0; t < num_tests; ++t) {
    for (size_t w = 0; w < words_; ++w) {
      uint64_t bits = masks_[t * words_ + w];
      while (bits) {
        per_individual[w * 64 + std::countr_zero(bits)].push_back(
            static_cast<uint32_t>(t));
        bits &= bits - 1;
      }
    }
  }
  tests_offset_.assign(n + 1, 0);
  for (size_t j = 0; j < n; ++j) {
    tests_offset_[j + 1] =
        tests_offset_[j] + static_cast<uint32_t>(per_individual[j].size());
    tests_of_.insert(tests_of_.end(), per_individual[j].begin(),
                     per_individual[j].end());
  }
  set_gamma(1.0);
}

void TemperedTarget::set_gamma(double gamma) {
  gamma_ = gamma;
  gain_.resize(ll_negative_.size());
  for (size_t t = 0; t < gain_.size(); ++t) {
    const double exponent = is_new_[t] ? gamma : 1.0;
    const double diff = ll_positive_[t] - ll_negative_[t];
    gain_[t] = exponent == 0.0 ? 0.0 : exponent * diff;
  }
}

size_t TemperedTarget::PositiveCount(std::span<const uint64_t> x,
                                     size_t t) const {
  size_t count = 0;
  for (size_t w = 0; w < words_; ++w) {
    count += std::popcount(x[w] & masks_[t * words_ + w]);
  }
  return count;
}

double TemperedTarget::LogPmf(std::span<const uint64_t> x) const {
  double v = 0.0;
  for (size_t j = 0; j < logit_.size(); ++j) {
    if ((x[j >> 6] >> (j & 63)) & 1u) v += logit_[j];
  }
  for (size_t t = 0; t < ll_negative_.size(); ++t) {
    const double exponent = is_new_[t] ? gamma_ : 1.0;
    if (exponent == 0.0) continue;
    v += exponent *
         (PositiveCount(x, t) > 0 ? ll_positive_[t] : ll_negative_[t]);
  }
  return v;
}

double TemperedTarget::NewLogLikelihood(std::span<const uint64_t> x) const {
  double v = 0.0;
  for (size_t t = 0; t < ll_negative_.size(); ++t) {
    if (!is_new_[t]) continue;
    v += PositiveCount(x, t) > 0 ? ll_positive_[t] : ll_negative_[t];
  }
  return v;
}

TemperedTarget::Walker::Walker(const TemperedTarget& target,
                               std::span<uint64_t> x)
    : target_(target), x_(x), counts_(target.ll_negative_.size()) {
  for (size_t t = 0; t < counts_.size(); ++t) {
    counts_[t] = static_cast<uint16_t>(target.PositiveCount(x, t));
  }
}

double TemperedTarget::Walker::LogRatioOfFlip(size_t j) const {
  const bool on = Bit(j);
  double d = on ? -target_.logit_[j] : target_.logit_[j];
  const uint32_t* begin = target_.tests_of_.data() + target_.tests_offset_[j];
  const uint32_t* end = target_.tests_of_.data() + target_.tests_offset_[j + 1];
  for (const uint32_t* it = begin; it != end; ++it) {
    const uint16_t c = counts_[*it];
    if (!on && c == 0) {
      d += target_.gain_[*it];
    } else if (on && c == 1) {
      d -= target_.gain_[*it];
    }
  }
  return d;
}

void TemperedTarget::Walker::ApplyFlip(size_t j) {
  const bool on = Bit(j);
  x_[j >> 6] ^= uint64_t{1} << (j & 63);
  const uint32_t* begin = target_.tests_of_.data() + target_.tests_offset_[j];
  const uint32_t* end = target_.tests_of_.data() + target_.tests_offset_[j + 1];
  for (const uint32_t* it = begin; it != end; ++it) {
    if (on) {
      --counts_[*it];
    } else {
      ++counts_[*it];
    }
  }
}

double TemperedTarget::Walker::NewLogLikelihood() const {
  double v = 0.0;
  for (size_t t = 0; t < counts_.size(); ++t) {
    if (!target_.is_new_[t]) continue;
    v += counts_[t] > 0 ? target_.ll_positive_[t] : target_.ll_negative_[t];
  }
  return v;
}

SmcResult SmcUpdate(const ParticlePosterior& current, const Prior& prior,
                    const TestHistory& past, const GroupBatch& batch,
                    const TestOutcomes& y, const NoiseModel& noise,
                    const SmcConfig& config, Rng& rng) {
  if (current.population() != prior.size()) {
    ThrowInvalidArgument("posterior and prior cover different populations");
  }
  if (batch.size() != y.size()) {
    ThrowInvalidArgument("outcome count does not match batch size");
  }
  if (batch.empty()) return {current, {}};

  TemperedTarget target(prior, past, batch, y, noise);
  ParticleCloud cloud = current.particles();
  std::vector<double> weights(current.weights().begin(),
                              current.weights().end());
  const size_t count = cloud.size();
  std::vector<double> loglik(count);
  bool any_possible = false;
  for (size_t i = 0; i < count; ++i) {
    loglik[i] = target.NewLogLikelihood(cloud.particle(i));
    if (weights[i] > 0.0 && loglik[i] > -INFINITY) any_possible = true;
  }
  if (!any_possible) {
    throw Error(ErrorCode::kDegenerateEvidence,
                "no particle is compatible with tests " +
                    DescribeBatch(batch, y));
  }

  TemperingOptions tempering{config.target_ess, config.bisection_tolerance,
                             config.bisection_max_iterations};
  TemperingTrace trace;
  double gamma = NextTemperature(0.0, weights, loglik, tempering);
  weights = Reweight(weights, loglik, gamma);
  trace.steps.push_back({gamma, Ess(weights), 0.0});

  while (gamma < 1.0) {
    const auto counts = SystematicResample(weights, rng);
    cloud = cloud.Replicate(counts);
    std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(count));

    target.set_gamma(gamma);
    size_t flips = 0;
    for (size_t i = 0; i < count; ++i) {
      TemperedTarget::Walker walker(target, cloud.mutable_particle(i));
      for (int s = 0; s < config.mcmc_sweeps; ++s) {
        flips += Sweep(config.kernel, walker, rng);
      }
      loglik[i] = walker.NewLogLikelihood();
    }
    const double proposals = static_cast<double>(count) *
                             static_cast<double>(target.population()) *
                             std::max(config.mcmc_sweeps, 1);
    trace.steps.back().acceptance_rate = static_cast<double>(flips) / proposals;

    const double previous = gamma;
    gamma = NextTemperature(previous, weights, loglik, tempering);
    weights = Reweight(weights, loglik, gamma - previous);
    trace.steps.push_back({gamma, Ess(weights), 0.0});
  }
  return {ParticlePosterior(std::move(cloud), std::move(weights)),
          std::move(trace)};
}

ParticlePosterior SmcFromPrior(const Prior& prior, const TestHistory& history,
                               const NoiseModel& noise, const SmcConfig& config,
                               Rng& rng) {
  auto particles =
      ParticlePosterior::SampleFromPrior(prior, config.num_particles, rng);
  return SmcUpdate(particles, prior, TestHistory{}, history.groups,
                   history.outcomes, noise, config, rng)
      .posterior;
}

}  // namespace gtboed
