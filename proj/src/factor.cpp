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

#include "privmarg/factor.hpp"

#include <cmath>
#include <limits>

namespace privmarg {

namespace {

std::int64_t checked_cell_count(const Domain& domain, const Clique& clique) {
  auto n = domain.cell_count(clique);
  if (!n) throw TableTooLargeError("clique sub-domain overflows int64");
  return *n;
}

}  // namespace

std::vector<std::int64_t> clique_strides(const Domain& domain,
                                         const Clique& clique) {
  const auto& ids = clique.ids();
  std::vector<std::int64_t> strides(ids.size());
  std::int64_t acc = 1;
  for (size_t k = ids.size(); k-- > 0;) {
    strides[k] = acc;
    acc *= domain.size(ids[k]);
  }
  return strides;
}

std::vector<std::int64_t> projection_index(const Domain& domain,
                                           const Clique& r, const Clique& s) {
  if (!s.subset_of(r)) {
    throw InvalidCliqueError("projection_index: s is not a subset of r");
  }
  const auto& rids = r.ids();
  const std::int64_t n_r = checked_cell_count(domain, r);
  // Weight of each r attribute in the flattened s index (0 if absent).
  const auto s_strides = clique_strides(domain, s);
  std::vector<std::int64_t> weight(rids.size(), 0);
  {
    const auto& sids = s.ids();
    size_t j = 0;
    for (size_t k = 0; k < rids.size(); ++k) {
      if (j < sids.size() && rids[k] == sids[j]) {
        weight[k] = s_strides[j];
        ++j;
      }
    }
  }
  std::vector<std::int64_t> index(static_cast<size_t>(n_r));
  std::vector<int> coord(rids.size(), 0);
  std::int64_t s_cell = 0;
  for (std::int64_t i = 0; i < n_r; ++i) {
    index[static_cast<size_t>(i)] = s_cell;
    // Advance the mixed-radix counter, last attribute fastest.
    for (size_t k = rids.size(); k-- > 0;) {
      s_cell += weight[k];
      if (++coord[k] < domain.size(rids[k])) break;
      s_cell -= weight[k] * domain.size(rids[k]);
      coord[k] = 0;
    }
  }
  return index;
}

std::int64_t flatten_index(const Domain& domain, const Clique& clique,
                           const std::vector<int>& coords) {
  const auto& ids = clique.ids();
  if (coords.size() != ids.size()) {
    throw InvalidArgumentError("flatten_index: coordinate count mismatch");
  }
  const auto strides = clique_strides(domain, clique);
  std::int64_t cell = 0;
  for (size_t k = 0; k < ids.size(); ++k) {
    if (coords[k] < 0 || coords[k] >= domain.size(ids[k])) {
      throw InvalidArgumentError("flatten_index: coordinate out of range");
    }
    cell += coords[k] * strides[k];
  }
  return cell;
}

std::vector<int> unflatten_index(const Domain& domain, const Clique& clique,
                                 std::int64_t cell) {
  const auto& ids = clique.ids();
  const auto strides = clique_strides(domain, clique);
  std::vector<int> coords(ids.size());
  for (size_t k = 0; k < ids.size(); ++k) {
    coords[k] = static_cast<int>((cell / strides[k]) % domain.size(ids[k]));
  }
  return coords;
}

Factor::Factor(DomainPtr domain, Clique clique, Eigen::ArrayXd values)
    : domain_(std::move(domain)),
      clique_(std::move(clique)),
      values_(std::move(values)) {
  if (!domain_) throw InvalidArgumentError("factor: null domain");
  if (!clique_.valid_for(*domain_)) {
    throw InvalidCliqueError("factor: clique not valid for domain");
  }
  const std::int64_t n = checked_cell_count(*domain_, clique_);
  if (values_.size() != n) {
    throw InvalidArgumentError("factor: values length does not match clique");
  }
}

Factor Factor::zeros(DomainPtr domain, Clique clique) {
  const std::int64_t n = checked_cell_count(*domain, clique);
  return Factor(std::move(domain), std::move(clique),
                Eigen::ArrayXd::Zero(n));
}

Factor Factor::constant(DomainPtr domain, Clique clique, double value) {
  const std::int64_t n = checked_cell_count(*domain, clique);
  return Factor(std::move(domain), std::move(clique),
                Eigen::ArrayXd::Constant(n, value));
}

Factor Factor::uniform(DomainPtr domain, Clique clique) {
  const std::int64_t n = checked_cell_count(*domain, clique);
  return Factor(std::move(domain), std::move(clique),
                Eigen::ArrayXd::Constant(n, 1.0 / static_cast<double>(n)));
}

double Factor::dot(const Factor& other) const {
  if (clique_ != other.clique_) {
    throw InvalidCliqueError("factor dot: clique mismatch");
  }
  return (values_ * other.values_).sum();
}

Factor& Factor::operator+=(const Factor& other) {
  if (clique_ != other.clique_) {
    throw InvalidCliqueError("factor +=: clique mismatch");
  }
  values_ += other.values_;
  return *this;
}

Factor& Factor::operator-=(const Factor& other) {
  if (clique_ != other.clique_) {
    throw InvalidCliqueError("factor -=: clique mismatch");
  }
  values_ -= other.values_;
  return *this;
}

Factor& Factor::operator*=(double scalar) {
  values_ *= scalar;
  return *this;
}

Factor marginalize(const Factor& f, const Clique& s) {
  if (!s.subset_of(f.clique())) {
    throw InvalidCliqueError("marginalize: target is not a subset");
  }
  const auto idx = projection_index(f.domain(), f.clique(), s);
  Factor out = Factor::zeros(f.domain_ptr(), s);
  auto& ov = out.mutable_values();
  const auto& v = f.values();
  for (std::int64_t i = 0; i < v.size(); ++i) {
    ov[idx[static_cast<size_t>(i)]] += v[i];
  }
  return out;
}

Factor expand(const Factor& f, const Clique& r) {
  if (!f.clique().subset_of(r)) {
    throw InvalidCliqueError("expand: target is not a superset");
  }
  const auto idx = projection_index(f.domain(), r, f.clique());
  const std::int64_t n_r = idx.size();
  Eigen::ArrayXd values(n_r);
  const auto& v = f.values();
  for (std::int64_t i = 0; i < n_r; ++i) {
    values[i] = v[idx[static_cast<size_t>(i)]];
  }
  return Factor(f.domain_ptr(), r, std::move(values));
}

Factor logsumexp(const Factor& f, const Clique& s) {
  if (!s.subset_of(f.clique())) {
    throw InvalidCliqueError("logsumexp: target is not a subset");
  }
  const auto idx = projection_index(f.domain(), f.clique(), s);
  const std::int64_t n_s = *f.domain().cell_count(s);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  Eigen::ArrayXd mx = Eigen::ArrayXd::Constant(n_s, kNegInf);
  const auto& v = f.values();
  for (std::int64_t i = 0; i < v.size(); ++i) {
    const std::int64_t j = idx[static_cast<size_t>(i)];
    if (v[i] > mx[j]) mx[j] = v[i];
  }
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(n_s);
  for (std::int64_t i = 0; i < v.size(); ++i) {
    const std::int64_t j = idx[static_cast<size_t>(i)];
    if (mx[j] != kNegInf) acc[j] += std::exp(v[i] - mx[j]);
  }
  Eigen::ArrayXd out(n_s);
  for (std::int64_t j = 0; j < n_s; ++j) {
    out[j] = (mx[j] == kNegInf) ? kNegInf : mx[j] + std::log(acc[j]);
  }
  return Factor(f.domain_ptr(), s, std::move(out));
}

double entropy(const Factor& f) {
  const auto& v = f.values();
  double h = 0.0;
  for (std::int64_t i = 0; i < v.size(); ++i) {
    if (v[i] < -1e-9) {
      throw InvalidDistributionError("entropy: negative probability entry");
    }
    if (v[i] >= kEntropyClampFloor) h -= v[i] * std::log(v[i]);
  }
  return h;
}

Factor normalized(const Factor& f) {
  const double total = f.sum();
  if (!(total > 0.0)) {
    throw InvalidDistributionError("normalized: nonpositive total mass");
  }
  return Factor(f.domain_ptr(), f.clique(), f.values() / total);
}

Factor normalized_from_log(const Factor& log_f) {
  const double mx = log_f.max_value();
  Eigen::ArrayXd e = (log_f.values() - mx).exp();
  const double total = e.sum();
  return Factor(log_f.domain_ptr(), log_f.clique(), e / total);
}

double l1_distance(const Factor& a, const Factor& b) {
  if (a.clique() != b.clique()) {
    throw InvalidCliqueError("l1_distance: clique mismatch");
  }
  return (a.values() - b.values()).abs().sum();
}

double linf_distance(const Factor& a, const Factor& b) {
  if (a.clique() != b.clique()) {
    throw InvalidCliqueError("linf_distance: clique mismatch");
  }
  return (a.values() - b.values()).abs().maxCoeff();
}

void CliqueVector::set(Factor f) {
  const Clique key = f.clique();
  entries_.insert_or_assign(key, std::move(f));
}

void CliqueVector::accumulate(const Factor& f) {
  auto it = entries_.find(f.clique());
  if (it == entries_.end()) {
    entries_.emplace(f.clique(), f);
  } else {
    it->second += f;
  }
}

bool CliqueVector::contains(const Clique& clique) const {
  return entries_.count(clique) > 0;
}

const Factor& CliqueVector::at(const Clique& clique) const {
  auto it = entries_.find(clique);
  if (it == entries_.end()) {
    throw IncompleteVectorError("clique vector: missing factor");
  }
  return it->second;
}

double CliqueVector::dot(const CliqueVector& other) const {
  if (entries_.size() != other.entries_.size()) {
    throw IncompleteVectorError("clique vector dot: key mismatch");
  }
  double total = 0.0;
  for (const auto& [clique, factor] : entries_) {
    total += factor.dot(other.at(clique));
  }
  return total;
}

double CliqueVector::linf_diff(const CliqueVector& other) const {
  if (entries_.size() != other.entries_.size()) {
    throw IncompleteVectorError("clique vector linf: key mismatch");
  }
  double worst = 0.0;
  for (const auto& [clique, factor] : entries_) {
    worst = std::max(worst, linf_distance(factor, other.at(clique)));
  }
  return worst;
}

CliqueVector& CliqueVector::operator+=(const CliqueVector& other) {
  for (const auto& [clique, factor] : other.entries_) accumulate(factor);
  return *this;
}

CliqueVector& CliqueVector::operator*=(double scalar) {
  for (auto& [clique, factor] : entries_) factor *= scalar;
  return *this;
}

}  // namespace privmarg
