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

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privmarg/error.hpp"

namespace privmarg {

class Clique;

// An ordered list of named discrete attributes. Immutable after construction.
class Domain {
 public:
  Domain() = default;
  Domain(std::vector<std::string> names, std::vector<int> sizes);

  int attr_count() const { return static_cast<int>(sizes_.size()); }
  int size(int attr) const { return sizes_[static_cast<size_t>(attr)]; }
  const std::string& name(int attr) const {
    return names_[static_cast<size_t>(attr)];
  }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<int>& sizes() const { return sizes_; }

  std::optional<int> find(std::string_view name) const;

  // Product of attribute sizes over `clique`, or nullopt on int64 overflow.
  std::optional<std::int64_t> cell_count(const Clique& clique) const;
  std::optional<std::int64_t> total_cell_count() const;

  bool operator==(const Domain&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<int> sizes_;
};

// A sorted set of attribute indices into some Domain. The empty clique is a
// valid scalar sub-domain.
class Clique {
 public:
  Clique() = default;
  explicit Clique(std::vector<int> ids);

  int size() const { return static_cast<int>(ids_.size()); }
  bool empty() const { return ids_.empty(); }
  const std::vector<int>& ids() const { return ids_; }

  bool contains(int attr) const;
  bool subset_of(const Clique& other) const;
  Clique intersect(const Clique& other) const;
  Clique unite(const Clique& other) const;

  // True when every index is valid for `domain`.
  bool valid_for(const Domain& domain) const;

  auto operator<=>(const Clique&) const = default;

 private:
  std::vector<int> ids_;
};

// Clique whose ids span the whole domain.
Clique full_clique(const Domain& domain);

// "A,B,C" using domain attribute names; "()" for the empty clique.
std::string to_string(const Clique& clique, const Domain& domain);

using DomainPtr = std::shared_ptr<const Domain>;

}  // namespace privmarg
