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

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "privmarg/factor.hpp"

namespace privmarg {

using Edge = std::pair<Clique, Clique>;  // (parent, child), child strictly inside parent

// Directed containment graph over cliques with positive counting numbers.
// Edges point from supersets to strict subsets; acyclic by construction.
class RegionGraph {
 public:
  // Vertices = closure of the clique set under pairwise intersection (empty
  // intersections dropped); edges = Hasse diagram of strict containment;
  // kappa = 1 everywhere.
  static RegionGraph saturated(DomainPtr domain,
                               const std::vector<Clique>& cliques);

  // Vertices = cliques plus every singleton appearing in one; edges from each
  // clique to its singletons; kappa = 1 everywhere.
  static RegionGraph factor_graph(DomainPtr domain,
                                  const std::vector<Clique>& cliques);

  // Assembles a graph from explicit parts, validating edge containment and
  // positive counting numbers (used by deserialisation).
  static RegionGraph from_parts(DomainPtr domain, std::vector<Clique> vertices,
                                std::vector<Edge> edges,
                                std::map<Clique, double> kappa);

  const std::vector<Clique>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool has_vertex(const Clique& clique) const;

  double kappa(const Clique& vertex) const;
  const std::map<Clique, double>& kappa_map() const { return kappa_; }
  // Same structure with every counting number replaced by `value`.
  RegionGraph with_uniform_kappa(double value) const;

  const std::vector<Clique>& parents(const Clique& vertex) const;
  const std::vector<Clique>& children(const Clique& vertex) const;

  // True iff the clique is contained in at least one vertex.
  bool supports(const Clique& clique) const;
  bool supports_all(const std::vector<Clique>& cliques) const;

  // Smallest containing vertex by (size, lexicographic) order.
  std::optional<Clique> smallest_containing_vertex(const Clique& clique) const;

  const Domain& domain() const { return *domain_; }
  const DomainPtr& domain_ptr() const { return domain_; }

 private:
  RegionGraph(DomainPtr domain, std::vector<Clique> vertices,
              std::vector<Edge> edges, std::map<Clique, double> kappa);

  DomainPtr domain_;
  std::vector<Clique> vertices_;  // sorted
  std::vector<Edge> edges_;       // sorted by (parent, child)
  std::map<Clique, double> kappa_;
  std::map<Clique, std::vector<Clique>> parents_;
  std::map<Clique, std::vector<Clique>> children_;
};

// Per-vertex normalisation gaps and per-edge L-infinity residuals of the
// local-polytope constraints.
struct ConsistencyReport {
  std::map<Clique, double> normalization_violations;
  std::map<Edge, double> edge_violations;
  double max_violation = 0.0;
  double min_entry = 0.0;
  double tol = 0.0;
  bool consistent = false;  // max_violation <= tol and min_entry >= -tol
};

ConsistencyReport check_local_consistency(const CliqueVector& tau,
                                          const RegionGraph& graph,
                                          double tol);

}  // namespace privmarg
