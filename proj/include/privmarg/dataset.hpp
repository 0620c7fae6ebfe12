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
#include <vector>

#include "privmarg/factor.hpp"

namespace privmarg {

// Ceiling on materialised full tables (cells); the exact oracle and the data
// vector exist only at desk scale.
inline constexpr std::int64_t kDefaultFullTableLimit = 10'000'000;

// A list of integer-coded records over a Domain. Immutable after
// construction; cells stored row-major.
class Dataset {
 public:
  Dataset(DomainPtr domain, std::vector<std::int32_t> cells);

  const Domain& domain() const { return *domain_; }
  const DomainPtr& domain_ptr() const { return domain_; }
  std::int64_t record_count() const {
    return domain_->attr_count() == 0
               ? 0
               : static_cast<std::int64_t>(cells_.size()) /
                     domain_->attr_count();
  }
  std::int32_t value(std::int64_t record, int attr) const {
    return cells_[static_cast<size_t>(record * domain_->attr_count() + attr)];
  }

 private:
  DomainPtr domain_;
  std::vector<std::int32_t> cells_;
};

// Normalised empirical marginal of X on r (sums to one).
Factor dataset_project(const Dataset& X, const Clique& r);

// The full data distribution as a factor on all attributes.
Factor dataset_datavector(const Dataset& X,
                          std::int64_t full_table_limit = kDefaultFullTableLimit);

}  // namespace privmarg
