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

#ifndef GTBOED_RNG_HPP_
#define GTBOED_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace gtboed {

// Explicitly passed random source. Draw helpers avoid the standard
// distributions so that sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool Bernoulli(double p) { return Uniform() < p; }

  // Uniform integer in [0, bound). bound must be positive.
  uint64_t UniformIndex(uint64_t bound) {
    const uint64_t limit = bound * (UINT64_MAX / bound);
    uint64_t draw;
    do {
      draw = engine_();
    } while (draw >= limit);
    return draw % bound;
  }

 private:
  std::mt19937_64 engine_;
};

// Deterministic stream seed for (master seed, index, label).
uint64_t DeriveSeed(uint64_t master, uint64_t index, std::string_view label);

inline Rng DeriveRng(uint64_t master, uint64_t index, std::string_view label) {
  return Rng(DeriveSeed(master, index, label));
}

}  // namespace gtboed

#endif  // GTBOED_RNG_HPP_
