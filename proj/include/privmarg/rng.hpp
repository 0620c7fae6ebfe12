// Copyright 2026 The privmarg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace privmarg {

// Deterministic random stream over std::mt19937_64 (the engine's outputs are
// fully specified by the standard, so identical seeds give identical streams
// on every platform). All derived draws avoid std::*_distribution, whose
// algorithms are implementation-defined:
//   uniform01: top 53 bits of one engine output, in [0, 1)
//   laplace:   inverse CDF, x = -b sgn(u - 1/2) ln(1 - 2|u - 1/2|)
//   gaussian:  Box-Muller cosine branch from two uniforms
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double laplace(double scale);
  double gaussian(double stddev);

  // Uniform integer in [0, n); floor of n * uniform01.
  std::int64_t uniform_int(std::int64_t n);

  // Index drawn with the given (not necessarily normalised) nonnegative
  // weights, by inverse-CDF walk.
  int categorical(std::span<const double> weights);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace privmarg
