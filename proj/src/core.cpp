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

#include "gtboed/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "gtboed/error.hpp"

namespace gtboed {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid_argument";
    case ErrorCode::kConfiguration:
      return "configuration";
    case ErrorCode::kDegenerateEvidence:
      return "degenerate_evidence";
    case ErrorCode::kNotFound:
      return "not_found";
    case ErrorCode::kConflict:
      return "conflict";
    case ErrorCode::kIo:
      return "io";
    case ErrorCode::kInternal:
      return "internal";
  }
  return "unknown";
}

uint64_t DeriveSeed(uint64_t master, uint64_t index, std::string_view label) {
  // FNV-1a over the label, then splitmix64 finalization of the mix.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  auto mix = [](uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ index) ^ h);
}

StateVector::StateVector(size_t n) : n_(n), words_(WordsFor(n), 0) {
  if (n > kMaxPopulation) {
    ThrowInvalidArgument("population size exceeds " +
                         std::to_string(kMaxPopulation));
  }
}

StateVector StateVector::FromString(std::string_view bits) {
  StateVector x(bits.size());
  for (size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') {
      ThrowInvalidArgument("state string must contain only 0 and 1");
    }
    x.Set(i, bits[i] == '1');
  }
  return x;
}

StateVector StateVector::FromWords(size_t n, std::span<const uint64_t> words) {
  StateVector x(n);
  if (words.size() != x.words_.size()) {
    ThrowInvalidArgument("word count does not match population size");
  }
  std::copy(words.begin(), words.end(), x.words_.begin());
  if (n % 64 != 0 && !x.words_.empty()) {
    x.words_.back() &= (uint64_t{1} << (n % 64)) - 1;
  }
  return x;
}

void StateVector::Set(size_t i, bool value) {
  const uint64_t bit = uint64_t{1} << (i & 63);
  if (value) {
    words_[i >> 6] |= bit;
  } else {
    words_[i >> 6] &= ~bit;
  }
}

size_t StateVector::Count() const {
  size_t count = 0;
  for (uint64_t w : words_) count += std::popcount(w);
  return count;
}

std::string StateVector::ToString() const {
  std::string out(n_, '0');
  for (size_t i = 0; i < n_; ++i) {
    if ((*this)[i]) out[i] = '1';
  }
  return out;
}

Group::Group(std::initializer_list<uint32_t> members)
    : Group(std::vector<uint32_t>(members)) {}

Group::Group(std::vector<uint32_t> members) : members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  if (std::adjacent_find(members_.begin(), members_.end()) != members_.end()) {
    ThrowInvalidArgument("group has duplicate members");
  }
}

bool Group::Contains(uint32_t individual) const {
  return std::binary_search(members_.begin(), members_.end(), individual);
}

void Group::Validate(size_t n, size_t max_size) const {
  if (members_.empty()) ThrowInvalidArgument("group is empty");
  if (members_.back() >= n) {
    ThrowInvalidArgument("group member " + std::to_string(members_.back()) +
                         " outside population of " + std::to_string(n));
  }
  if (members_.size() > max_size) {
    ThrowInvalidArgument("group of size " + std::to_string(members_.size()) +
                         " exceeds maximum " + std::to_string(max_size));
  }
}

std::vector<uint64_t> Group::Mask(size_t n) const {
  std::vector<uint64_t> mask(WordsFor(n), 0);
  for (uint32_t i : members_) mask[i >> 6] |= uint64_t{1} << (i & 63);
  return mask;
}

std::string Group::ToString() const {
  std::ostringstream out;
  for (size_t i = 0; i < members_.size(); ++i) {
    if (i) out << ',';
    out << members_[i];
  }
  return out.str();
}

NoiseModel NoiseModel::Constant(double specificity, double sensitivity,
                                size_t max_group_size) {
  return FromTables(std::vector<double>(max_group_size, specificity),
                    std::vector<double>(max_group_size, sensitivity));
}

NoiseModel NoiseModel::FromTables(std::vector<double> specificity,
                                  std::vector<double> sensitivity) {
  if (specificity.empty() || specificity.size() != sensitivity.size()) {
    ThrowInvalidArgument(
        "noise tables must be non-empty and of equal length");
  }
  for (size_t i = 0; i < specificity.size(); ++i) {
    const double spec = specificity[i];
    const double sens = sensitivity[i];
    if (!(spec > 0.0 && spec <= 1.0) || !(sens > 0.0 && sens <= 1.0)) {
      ThrowInvalidArgument("noise entries must lie in (0, 1]");
    }
    if (!(spec + sens - 1.0 > 0.0)) {
      ThrowInvalidArgument("tests must be better than chance (spec + sens > 1)");
    }
  }
  NoiseModel model;
  model.specificity_ = std::move(specificity);
  model.sensitivity_ = std::move(sensitivity);
  return model;
}

size_t NoiseModel::Index(size_t g) const {
  if (g == 0 || g > specificity_.size()) {
    ThrowInvalidArgument("group size " + std::to_string(g) +
                         " outside noise table 1.." +
                         std::to_string(specificity_.size()));
  }
  return g - 1;
}

double NoiseModel::PositiveProbability(size_t g, bool status) const {
  return status ? sensitivity(g) : 1.0 - specificity(g);
}

double NoiseModel::LogLikelihood(size_t g, bool status, bool y) const {
  const double p1 = PositiveProbability(g, status);
  return std::log(y ? p1 : 1.0 - p1);
}

Prior Prior::Uniform(size_t n, double q) {
  return FromRates(std::vector<double>(n, q));
}

Prior Prior::FromRates(std::vector<double> rates) {
  if (rates.empty() || rates.size() > kMaxPopulation) {
    ThrowInvalidArgument("prior must cover 1.." +
                         std::to_string(kMaxPopulation) + " individuals");
  }
  for (double q : rates) {
    if (!(q > 0.0 && q < 1.0)) {
      ThrowInvalidArgument("prior rates must lie in (0, 1)");
    }
  }
  return Prior{std::move(rates)};
}

double Prior::MeanRate() const {
  return std::accumulate(rates.begin(), rates.end(), 0.0) /
         static_cast<double>(rates.size());
}

StateVector Prior::Sample(Rng& rng) const {
  StateVector x(rates.size());
  for (size_t i = 0; i < rates.size(); ++i) {
    if (rng.Bernoulli(rates[i])) x.Set(i, true);
  }
  return x;
}

void TestHistory::Append(const GroupBatch& batch, const TestOutcomes& results) {
  if (batch.size() != results.size()) {
    ThrowInvalidArgument("outcome count does not match batch size");
  }
  groups.insert(groups.end(), batch.begin(), batch.end());
  outcomes.insert(outcomes.end(), results.begin(), results.end());
}

bool GroupStatus(const Group& g, const StateVector& x) {
  if (g.empty()) ThrowInvalidArgument("group is empty");
  for (uint32_t i : g.members()) {
    if (i >= x.size()) ThrowInvalidArgument("group member outside population");
    if (x[i]) return true;
  }
  return false;
}

double TestLogLikelihood(const Group& g, bool y, const StateVector& x,
                         const NoiseModel& noise) {
  const bool status = GroupStatus(g, x);
  return noise.LogLikelihood(g.size(), status, y);
}

double BatchLogLikelihood(const GroupBatch& batch, const TestOutcomes& y,
                          const StateVector& x, const NoiseModel& noise) {
  if (batch.size() != y.size()) {
    ThrowInvalidArgument("outcome count does not match batch size");
  }
  double total = 0.0;
  for (size_t i = 0; i < batch.size(); ++i) {
    total += TestLogLikelihood(batch[i], y[i] != 0, x, noise);
  }
  return total;
}

TestOutcomes SampleOutcomes(const GroupBatch& batch, const StateVector& truth,
                            const NoiseModel& noise, Rng& rng) {
  TestOutcomes out(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    const double p = noise.PositiveProbability(batch[i].size(),
                                               GroupStatus(batch[i], truth));
    out[i] = rng.Bernoulli(p) ? 1 : 0;
  }
  return out;
}

bool HistoryIsPossible(const TestHistory& history, const NoiseModel& noise) {
  // Negative results of perfectly sensitive tests clear their members; a
  // positive result of a perfectly specific test then needs an uncleared
  // member. Setting every uncleared individual infected satisfies the rest.
  std::vector<uint8_t> cleared;
  for (size_t t = 0; t < history.size(); ++t) {
    const Group& g = history.groups[t];
    if (history.outcomes[t] || noise.sensitivity(g.size()) < 1.0) continue;
    for (uint32_t i : g.members()) {
      if (i >= cleared.size()) cleared.resize(i + 1, 0);
      cleared[i] = 1;
    }
  }
  for (size_t t = 0; t < history.size(); ++t) {
    const Group& g = history.groups[t];
    if (!history.outcomes[t] || noise.specificity(g.size()) < 1.0) continue;
    const auto members = g.members();
    if (std::all_of(members.begin(), members.end(), [&](uint32_t i) {
          return i < cleared.size() && cleared[i];
        })) {
      return false;
    }
  }
  return true;
}

double BinaryEntropy(double u) {
  double h = 0.0;
  if (u > 0.0) h -= u * std::log(u);
  if (u < 1.0) h -= (1.0 - u) * std::log1p(-u);
  return h;
}

}  // namespace gtboed
