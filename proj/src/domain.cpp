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

#include "privmarg/domain.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

namespace privmarg {

Domain::Domain(std::vector<std::string> names, std::vector<int> sizes)
    : names_(std::move(names)), sizes_(std::move(sizes)) {
  if (names_.size() != sizes_.size()) {
    throw InvalidArgumentError("domain: names and sizes differ in length");
  }
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw InvalidArgumentError("domain: empty attribute name");
    if (!seen.insert(n).second) {
      throw InvalidArgumentError("domain: duplicate attribute name '" + n +
                                 "'");
    }
  }
  for (int s : sizes_) {
    if (s < 1) throw InvalidArgumentError("domain: attribute size must be >= 1");
  }
}

std::optional<int> Domain::find(std::string_view name) const {
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<std::int64_t> Domain::cell_count(const Clique& clique) const {
  std::int64_t total = 1;
  for (int attr : clique.ids()) {
    const std::int64_t s = size(attr);
    if (total > std::numeric_limits<std::int64_t>::max() / s) {
      return std::nullopt;
    }
    total *= s;
  }
  return total;
}

std::optional<std::int64_t> Domain::total_cell_count() const {
  std::vector<int> all(sizes_.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return cell_count(Clique(std::move(all)));
}

Clique::Clique(std::vector<int> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  if (!ids_.empty() && ids_.front() < 0) {
    throw InvalidArgumentError("clique: negative attribute index");
  }
}

bool Clique::contains(int attr) const {
  return std::binary_search(ids_.begin(), ids_.end(), attr);
}

bool Clique::subset_of(const Clique& other) const {
  return std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(),
                       ids_.end());
}

Clique Clique::intersect(const Clique& other) const {
  std::vector<int> out;
  std::set_intersection(ids_.begin(), ids_.end(), other.ids_.begin(),
                        other.ids_.end(), std::back_inserter(out));
  return Clique(std::move(out));
}

Clique Clique::unite(const Clique& other) const {
  std::vector<int> out;
  std::set_union(ids_.begin(), ids_.end(), other.ids_.begin(),
                 other.ids_.end(), std::back_inserter(out));
  return Clique(std::move(out));
}

bool Clique::valid_for(const Domain& domain) const {
  return ids_.empty() || ids_.back() < domain.attr_count();
}

Clique full_clique(const Domain& domain) {
  std::vector<int> all(static_cast<size_t>(domain.attr_count()));
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return Clique(std::move(all));
}

std::string to_string(const Clique& clique, const Domain& domain) {
  if (clique.empty()) return "()";
  std::string out;
  for (int attr : clique.ids()) {
    if (!out.empty()) out += ',';
    out += domain.name(attr);
  }
  return out;
}

}  // namespace privmarg
