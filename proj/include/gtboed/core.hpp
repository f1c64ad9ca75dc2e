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

// Domain types and the noisy pooled-test model: group status, single-test
// and batch likelihoods, and outcome sampling. All likelihoods are natural
// logarithms.

#ifndef GTBOED_CORE_HPP_
#define GTBOED_CORE_HPP_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gtboed/rng.hpp"

namespace gtboed {

inline constexpr size_t kMaxPopulation = 1024;

inline constexpr size_t WordsFor(size_t n) { return (n + 63) / 64; }

// Infection status of the whole population, packed 64 individuals per word.
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(size_t n);

  // Parses a string of '0'/'1' characters, individual 0 first.
  static StateVector FromString(std::string_view bits);
  static StateVector FromWords(size_t n, std::span<const uint64_t> words);

  size_t size() const { return n_; }
  bool operator[](size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  void Set(size_t i, bool value);
  void Flip(size_t i) { words_[i >> 6] ^= uint64_t{1} << (i & 63); }
  size_t Count() const;

  std::span<const uint64_t> words() const { return words_; }
  std::span<uint64_t> mutable_words() { return words_; }

  std::string ToString() const;

  bool operator==(const StateVector&) const = default;

 private:
  size_t n_ = 0;
  std::vector<uint64_t> words_;
};

// Set of individuals pooled into one test. Members are kept sorted.
class Group {
 public:
  Group() = default;
  Group(std::initializer_list<uint32_t> members);
  // Sorts members; throws kInvalidArgument on duplicates.
  explicit Group(std::vector<uint32_t> members);

  std::span<const uint32_t> members() const { return members_; }
  size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  bool Contains(uint32_t individual) const;

  // Non-empty, members < n, size <= max_size.
  void Validate(size_t n, size_t max_size) const;

  // Packed membership mask over a population of n.
  std::vector<uint64_t> Mask(size_t n) const;

  std::string ToString() const;

  bool operator==(const Group&) const = default;
  auto operator<=>(const Group&) const = default;

 private:
  std::vector<uint32_t> members_;
};

using GroupBatch = std::vector<Group>;
using TestOutcomes = std::vector<uint8_t>;

// Specificity and sensitivity tables indexed by exact group size 1..max.
class NoiseModel {
 public:
  NoiseModel() = default;
  static NoiseModel Constant(double specificity, double sensitivity,
                             size_t max_group_size);
  static NoiseModel FromTables(std::vector<double> specificity,
                               std::vector<double> sensitivity);

  size_t max_group_size() const { return specificity_.size(); }
  double specificity(size_t g) const { return specificity_[Index(g)]; }
  double sensitivity(size_t g) const { return sensitivity_[Index(g)]; }
  double rho(size_t g) const { return specificity(g) + sensitivity(g) - 1.0; }

  // log P(Y = y | group status), for a group of size g.
  double LogLikelihood(size_t g, bool status, bool y) const;
  // P(Y = 1 | group status).
  double PositiveProbability(size_t g, bool status) const;

  const std::vector<double>& specificity_table() const { return specificity_; }
  const std::vector<double>& sensitivity_table() const { return sensitivity_; }

  bool operator==(const NoiseModel&) const = default;

 private:
  size_t Index(size_t g) const;

  std::vector<double> specificity_;
  std::vector<double> sensitivity_;
};

// Independent Bernoulli prior on infection.
struct Prior {
  std::vector<double> rates;

  static Prior Uniform(size_t n, double q);
  static Prior FromRates(std::vector<double> rates);

  size_t size() const { return rates.size(); }
  double MeanRate() const;
  StateVector Sample(Rng& rng) const;

  bool operator==(const Prior&) const = default;
};

// Tests observed so far, in the order they were run.
struct TestHistory {
  GroupBatch groups;
  TestOutcomes outcomes;

  void Append(const GroupBatch& batch, const TestOutcomes& results);
  size_t size() const { return groups.size(); }
  bool empty() const { return groups.empty(); }
};

bool GroupStatus(const Group& g, const StateVector& x);

double TestLogLikelihood(const Group& g, bool y, const StateVector& x,
                         const NoiseModel& noise);

double BatchLogLikelihood(const GroupBatch& batch, const TestOutcomes& y,
                          const StateVector& x, const NoiseModel& noise);

TestOutcomes SampleOutcomes(const GroupBatch& batch, const StateVector& truth,
                            const NoiseModel& noise, Rng& rng);

// Whether some state has positive probability under `history`, given that
// prior rates lie strictly inside (0, 1). Only tests with a zero-probability
// outcome (specificity or sensitivity of 1) constrain the answer.
bool HistoryIsPossible(const TestHistory& history, const NoiseModel& noise);

// h(u) = -u log u - (1-u) log(1-u), with 0 log 0 = 0.
double BinaryEntropy(double u);

}  // namespace gtboed

#endif  // GTBOED_CORE_HPP_
