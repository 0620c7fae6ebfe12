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

#include "privmarg/rng.hpp"

#include <cmath>

#include "privmarg/error.hpp"

namespace privmarg {

double SeededRng::laplace(double scale) {
  const double u = uniform01() - 0.5;
  const double mag = std::log(1.0 - 2.0 * std::abs(u));
  return u < 0.0 ? scale * mag : -scale * mag;
}

double SeededRng::gaussian(double stddev) {
  double u1 = uniform01();
  while (u1 == 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double two_pi = 6.283185307179586476925286766559;
  return stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

std::int64_t SeededRng::uniform_int(std::int64_t n) {
  if (n <= 0) throw InvalidArgumentError("uniform_int: n must be positive");
  const auto v = static_cast<std::int64_t>(uniform01() * static_cast<double>(n));
  return v >= n ? n - 1 : v;
}

int SeededRng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) {
      throw InvalidArgumentError("categorical: weights must be finite and >= 0");
    }
    total += w;
  }
  if (!(total > 0.0)) {
    throw InvalidArgumentError("categorical: total weight must be positive");
  }
  const double u = uniform01() * total;
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

}  // namespace privmarg
