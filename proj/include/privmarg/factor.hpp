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

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "privmarg/domain.hpp"

namespace privmarg {

// Cells of a clique's sub-domain are indexed lexicographically with the
// clique's attributes in ascending id order and the last attribute varying
// fastest. These helpers build the stride and cross-clique index tables that
// all factor operations share.

// stride[k] = product of sizes of ids()[k+1..]; empty clique -> empty vector.
std::vector<std::int64_t> clique_strides(const Domain& domain,
                                         const Clique& clique);

// For s subset of r: maps each cell of r to the cell of s it projects onto.
// Length = cell_count(r); values in [0, cell_count(s)).
std::vector<std::int64_t> projection_index(const Domain& domain,
                                           const Clique& r, const Clique& s);

// Flatten / unflatten a multi-index over a clique's sub-domain.
std::int64_t flatten_index(const Domain& domain, const Clique& clique,
                           const std::vector<int>& coords);
std::vector<int> unflatten_index(const Domain& domain, const Clique& clique,
                                 std::int64_t cell);

// A dense real-valued table over the sub-domain of a clique. Immutable in
// spirit: operations return new factors; in-place arithmetic is provided for
// accumulation loops. Values may be probabilities, log-potentials, or
// gradients depending on context.
class Factor {
 public:
  Factor(DomainPtr domain, Clique clique, Eigen::ArrayXd values);

  static Factor zeros(DomainPtr domain, Clique clique);
  static Factor constant(DomainPtr domain, Clique clique, double value);
  // 1/n_r in every cell.
  static Factor uniform(DomainPtr domain, Clique clique);

  const Clique& clique() const { return clique_; }
  const Domain& domain() const { return *domain_; }
  const DomainPtr& domain_ptr() const { return domain_; }
  const Eigen::ArrayXd& values() const { return values_; }
  Eigen::ArrayXd& mutable_values() { return values_; }
  std::int64_t cell_count() const { return values_.size(); }

  double sum() const { return values_.sum(); }
  double max_value() const { return values_.maxCoeff(); }
  double dot(const Factor& other) const;

  Factor& operator+=(const Factor& other);
  Factor& operator-=(const Factor& other);
  Factor& operator*=(double scalar);

  friend Factor operator+(Factor lhs, const Factor& rhs) { return lhs += rhs; }
  friend Factor operator-(Factor lhs, const Factor& rhs) { return lhs -= rhs; }
  friend Factor operator*(Factor lhs, double scalar) { return lhs *= scalar; }
  friend Factor operator*(double scalar, Factor rhs) { return rhs *= scalar; }

 private:
  DomainPtr domain_;
  Clique clique_;
  Eigen::ArrayXd values_;
};

// Sum f over the variables outside s (operator P_{r->s}). Requires s subset
// of f's clique.
Factor marginalize(const Factor& f, const Clique& s);

// Broadcast f onto the superset clique r (adjoint of marginalize).
Factor expand(const Factor& f, const Clique& r);

// log sum exp of a log-space factor onto s, stabilised by max subtraction.
Factor logsumexp(const Factor& f, const Clique& s);

// Shannon entropy in nats of a distribution factor. Entries below the clamp
// floor contribute zero; entries below -1e-9 raise InvalidDistributionError.
double entropy(const Factor& f);

// f scaled to sum to one.
Factor normalized(const Factor& f);

// exp(f - logsumexp(f)): distribution from a log-space factor.
Factor normalized_from_log(const Factor& log_f);

// Sum of |a - b| over cells; cliques must match.
double l1_distance(const Factor& a, const Factor& b);
double linf_distance(const Factor& a, const Factor& b);

// Floor applied to log arguments when computing entropies.
inline constexpr double kEntropyClampFloor = 1e-15;

// A keyed collection of factors, one per clique, iterated in sorted clique
// order.
class CliqueVector {
 public:
  CliqueVector() = default;

  void set(Factor f);
  // Inserts or adds element-wise into the factor with the same clique.
  void accumulate(const Factor& f);

  bool contains(const Clique& clique) const;
  const Factor& at(const Clique& clique) const;
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  // Sum over common structure; keys must coincide factor-by-factor.
  double dot(const CliqueVector& other) const;
  double linf_diff(const CliqueVector& other) const;

  CliqueVector& operator+=(const CliqueVector& other);
  CliqueVector& operator*=(double scalar);

 private:
  std::map<Clique, Factor> entries_;
};

}  // namespace privmarg
