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

#include "privmarg/dataset.hpp"

namespace privmarg {

Dataset::Dataset(DomainPtr domain, std::vector<std::int32_t> cells)
    : domain_(std::move(domain)), cells_(std::move(cells)) {
  if (!domain_) throw InvalidArgumentError("dataset: null domain");
  const int d = domain_->attr_count();
  if (d == 0) {
    if (!cells_.empty()) {
      throw InvalidArgumentError("dataset: cells in an empty domain");
    }
    return;
  }
  if (cells_.size() % static_cast<size_t>(d) != 0) {
    throw InvalidArgumentError("dataset: cell count not a multiple of width");
  }
  for (size_t i = 0; i < cells_.size(); ++i) {
    const int attr = static_cast<int>(i % static_cast<size_t>(d));
    if (cells_[i] < 0 || cells_[i] >= domain_->size(attr)) {
      throw InvalidArgumentError("dataset: value out of attribute range");
    }
  }
}

Factor dataset_project(const Dataset& X, const Clique& r) {
  if (!r.valid_for(X.domain())) {
    throw InvalidCliqueError("dataset_project: clique not valid for domain");
  }
  const std::int64_t m = X.record_count();
  if (m == 0) throw EmptyDatasetError("dataset_project: no records");
  const auto strides = clique_strides(X.domain(), r);
  Factor out = Factor::zeros(X.domain_ptr(), r);
  auto& v = out.mutable_values();
  const auto& ids = r.ids();
  const double w = 1.0 / static_cast<double>(m);
  for (std::int64_t i = 0; i < m; ++i) {
    std::int64_t cell = 0;
    for (size_t k = 0; k < ids.size(); ++k) {
      cell += X.value(i, ids[k]) * strides[k];
    }
    v[cell] += w;
  }
  return out;
}

Factor dataset_datavector(const Dataset& X, std::int64_t full_table_limit) {
  const Clique full = full_clique(X.domain());
  const auto n = X.domain().cell_count(full);
  if (!n || *n > full_table_limit) {
    throw TableTooLargeError("dataset_datavector: domain exceeds table limit");
  }
  return dataset_project(X, full);
}

}  // namespace privmarg
