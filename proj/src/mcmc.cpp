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

#include "gtboed/mcmc.hpp"

namespace gtboed {
namespace {

// Walker over an arbitrary log-pmf; re-evaluates the target per proposal.
class FunctionWalker {
 public:
  FunctionWalker(StateVector& x, const LogPmf& target)
      : x_(x), target_(target), current_(target(x)) {}

  size_t size() const { return x_.size(); }

  double LogRatioOfFlip(size_t j) {
    x_.Flip(j);
    proposed_ = target_(x_);
    x_.Flip(j);
    return proposed_ - current_;
  }

  void ApplyFlip(size_t j) {
    x_.Flip(j);
    current_ = proposed_;
  }

 private:
  StateVector& x_;
  const LogPmf& target_;
  double current_;
  double proposed_ = 0.0;
};

StateVector RunSweep(McmcKernel kernel, StateVector x, const LogPmf& target,
                     Rng& rng) {
  FunctionWalker walker(x, target);
  Sweep(kernel, walker, rng);
  return x;
}

}  // namespace

StateVector ModifiedGibbsSweep(StateVector x, const LogPmf& target, Rng& rng) {
  return RunSweep(McmcKernel::kModifiedGibbs, std::move(x), target, rng);
}

StateVector GibbsSweep(StateVector x, const LogPmf& target, Rng& rng) {
  return RunSweep(McmcKernel::kGibbs, std::move(x), target, rng);
}

}  // namespace gtboed
