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

// Marginal decoders: loopy belief propagation on the test factor graph and
// a hybrid rule that falls back to a particle marginal when LBP does not
// settle.

#ifndef GTBOED_DECODER_HPP_
#define GTBOED_DECODER_HPP_

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "gtboed/core.hpp"
#include "gtboed/rng.hpp"
#include "gtboed/smc.hpp"

namespace gtboed {

struct LbpOptions {
  int max_iterations = 1000;
  double tolerance = 0.02;
};

struct LbpReport {
  std::vector<double> marginal;
  bool converged = false;
  int iterations = 0;
  // Max over individuals of |marginal_t - marginal_{t-1}| at the last
  // iteration.
  double max_delta = 0.0;
};

// Synchronous log-domain message passing with beta messages started at 0.
LbpReport LbpDecode(const TestHistory& history, const NoiseModel& noise,
                    const Prior& prior, const LbpOptions& options = {});

inline constexpr double kOscillationThreshold = 0.5;

inline bool DetectOscillation(const LbpReport& report) {
  return report.max_delta > kOscillationThreshold;
}

struct HybridResult {
  std::vector<double> marginal;
  bool used_lbp = true;
  LbpReport lbp;
};

using MarginalFallback = std::function<std::vector<double>()>;

// LBP marginal when it converges, otherwise whatever `fallback` returns.
HybridResult HybridDecode(const TestHistory& history, const NoiseModel& noise,
                          const Prior& prior, const MarginalFallback& fallback,
                          const LbpOptions& options = {});

// Fallback runs SMC from the prior through the whole history.
HybridResult HybridDecode(const TestHistory& history, const NoiseModel& noise,
                          const Prior& prior, const SmcConfig& smc, Rng& rng,
                          const LbpOptions& options = {});

// Recorded tests, one per line: comma-separated 0-based indices, whitespace,
// then the 0/1 outcome. '#' starts a comment. Throws kInvalidArgument with
// the line number on malformed input.
TestHistory ParseTestRecords(std::string_view text);

}  // namespace gtboed

#endif  // GTBOED_DECODER_HPP_
