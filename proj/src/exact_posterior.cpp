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

#include "gtboed/exact_posterior.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "gtboed/error.hpp"

namespace gtboed {
namespace {

uint32_t MaskOf(const Group& g) {
  uint32_t mask = 0;
  for (uint32_t i : g.members()) mask |= uint32_t{1} << i;
  return mask;
}

void NormalizeLog(std::vector<double>& log_mass) {
  double max_log = -std::numeric_limits<double>::infinity();
  for (double v : log_mass) max_log = std::max(max_log, v);
  if (max_log == -std::numeric_limits<double>::infinity()) {
    throw Error(ErrorCode::kDegenerateEvidence,
                "every state has zero likelihood under the observed tests");
  }
  double total = 0.0;
  for (double v : log_mass) total += std::exp(v - max_log);
  const double log_norm = max_log + std::log(total);
  for (double& v : log_mass) v -= log_norm;
}

}  // namespace

ExactPosterior ExactPosterior::FromPrior(const Prior& prior) {
  const size_t n = prior.size();
  if (n > kMaxPopulation) {
    ThrowInvalidArgument("exact posterior supports at most 24 individuals");
  }
  ExactPosterior p;
  p.population_ = n;
  p.log_mass_.assign(size_t{1} << n, 0.0);
  std::vector<double> log_q(n), log_not_q(n);
  for (size_t i = 0; i < n; ++i) {
    log_q[i] = std::log(prior.rates[i]);
    log_not_q[i] = std::log1p(-prior.rates[i]);
  }
  for (size_t s = 0; s < p.log_mass_.size(); ++s) {
    double v = 0.0;
    for (size_t i = 0; i < n; ++i) v += (s >> i & 1u) ? log_q[i] : log_not_q[i];
    p.log_mass_[s] = v;
  }
  NormalizeLog(p.log_mass_);
  return p;
}

double ExactPosterior::Probability(uint32_t state) const {
  return std::exp(log_mass_.at(state));
}

ExactPosterior ExactPosterior::Update(const GroupBatch& batch,
                                      const TestOutcomes& y,
                                      const NoiseModel& noise) const {
  if (batch.size() != y.size()) {
    ThrowInvalidArgument("outcome count does not match batch size");
  }
  ExactPosterior out = *this;
  if (batch.empty()) return out;
  std::vector<uint32_t> masks;
  std::vector<double> ll_negative, ll_positive;
  for (size_t t = 0; t < batch.size(); ++t) {
    batch[t].Validate(population_, noise.max_group_size());
    masks.push_back(MaskOf(batch[t]));
    ll_negative.push_back(noise.LogLikelihood(batch[t].size(), false, y[t]));
    ll_positive.push_back(noise.LogLikelihood(batch[t].size(), true, y[t]));
  }
  for (size_t s = 0; s < out.log_mass_.size(); ++s) {
    double& v = out.log_mass_[s];
    if (v == -std::numeric_limits<double>::infinity()) continue;
    for (size_t t = 0; t < masks.size(); ++t) {
      v += (s & masks[t]) ? ll_positive[t] : ll_negative[t];
    }
  }
  NormalizeLog(out.log_mass_);
  return out;
}

std::vector<double> ExactPosterior::Marginal() const {
  std::vector<double> m(population_, 0.0);
  for (size_t s = 0; s < log_mass_.size(); ++s) {
    const double p = std::exp(log_mass_[s]);
    if (p == 0.0) continue;
    for (size_t i = 0; i < population_; ++i) {
      if (s >> i & 1u) m[i] += p;
    }
  }
  return m;
}

ParticlePosterior ExactPosterior::ToParticles() const {
  std::vector<size_t> support;
  for (size_t s = 0; s < log_mass_.size(); ++s) {
    if (std::exp(log_mass_[s]) > 0.0) support.push_back(s);
  }
  ParticleCloud cloud(population_, support.size());
  std::vector<double> weights;
  weights.reserve(support.size());
  for (size_t k = 0; k < support.size(); ++k) {
    cloud.mutable_particle(k)[0] = support[k];
    weights.push_back(std::exp(log_mass_[support[k]]));
  }
  return ParticlePosterior(std::move(cloud), std::move(weights));
}

}  // namespace gtboed
