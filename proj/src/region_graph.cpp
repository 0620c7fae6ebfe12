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

#include "privmarg/region_graph.hpp"

#include <algorithm>
#include <set>

namespace privmarg {

namespace {

// Input cliques deduplicated, empty cliques dropped, validity checked.
std::set<Clique> sanitize_cliques(const Domain& domain,
                                  const std::vector<Clique>& cliques) {
  std::set<Clique> out;
  for (const auto& c : cliques) {
    if (!c.valid_for(domain)) {
      throw InvalidCliqueError("region graph: clique not valid for domain");
    }
    if (!c.empty()) out.insert(c);
  }
  if (out.empty()) {
    throw InvalidArgumentError("region graph: no nonempty cliques given");
  }
  return out;
}

std::vector<Edge> hasse_edges(const std::set<Clique>& vertices) {
  std::vector<Edge> edges;
  for (const auto& r : vertices) {
    for (const auto& s : vertices) {
      if (s == r || !s.subset_of(r)) continue;
      bool covered = false;
      for (const auto& t : vertices) {
        if (t == r || t == s) continue;
        if (s.subset_of(t) && t.subset_of(r)) {
          covered = true;
          break;
        }
      }
      if (!covered) edges.emplace_back(r, s);
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

}  // namespace

RegionGraph::RegionGraph(DomainPtr domain, std::vector<Clique> vertices,
                         std::vector<Edge> edges,
                         std::map<Clique, double> kappa)
    : domain_(std::move(domain)),
      vertices_(std::move(vertices)),
      edges_(std::move(edges)),
      kappa_(std::move(kappa)) {
  std::sort(vertices_.begin(), vertices_.end());
  std::sort(edges_.begin(), edges_.end());
  for (const auto& v : vertices_) {
    parents_[v];
    children_[v];
  }
  for (const auto& [parent, child] : edges_) {
    children_.at(parent).push_back(child);
    parents_.at(child).push_back(parent);
  }
}

RegionGraph RegionGraph::saturated(DomainPtr domain,
                                   const std::vector<Clique>& cliques) {
  std::set<Clique> vertices = sanitize_cliques(*domain, cliques);
  // Fixed-point closure under pairwise intersection.
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<Clique> added;
    for (auto it = vertices.begin(); it != vertices.end(); ++it) {
      for (auto jt = std::next(it); jt != vertices.end(); ++jt) {
        Clique w = it->intersect(*jt);
        if (!w.empty() && !vertices.count(w)) added.push_back(std::move(w));
      }
    }
    for (auto& w : added) grew |= vertices.insert(std::move(w)).second;
  }
  std::map<Clique, double> kappa;
  for (const auto& v : vertices) kappa[v] = 1.0;
  return RegionGraph(std::move(domain),
                     std::vector<Clique>(vertices.begin(), vertices.end()),
                     hasse_edges(vertices), std::move(kappa));
}

RegionGraph RegionGraph::factor_graph(DomainPtr domain,
                                      const std::vector<Clique>& cliques) {
  std::set<Clique> vertices = sanitize_cliques(*domain, cliques);
  std::vector<Edge> edges;
  std::set<Clique> singletons;
  for (const auto& r : vertices) {
    for (int attr : r.ids()) {
      Clique s(std::vector<int>{attr});
      if (s != r) {
        singletons.insert(s);
        edges.emplace_back(r, s);
      }
    }
  }
  vertices.insert(singletons.begin(), singletons.end());
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::map<Clique, double> kappa;
  for (const auto& v : vertices) kappa[v] = 1.0;
  return RegionGraph(std::move(domain),
                     std::vector<Clique>(vertices.begin(), vertices.end()),
                     std::move(edges), std::move(kappa));
}

RegionGraph RegionGraph::from_parts(DomainPtr domain,
                                    std::vector<Clique> vertices,
                                    std::vector<Edge> edges,
                                    std::map<Clique, double> kappa) {
  std::set<Clique> vset(vertices.begin(), vertices.end());
  if (vset.empty()) {
    throw InvalidArgumentError("region graph: empty vertex set");
  }
  for (const auto& v : vset) {
    if (!v.valid_for(*domain)) {
      throw InvalidCliqueError("region graph: vertex not valid for domain");
    }
    auto it = kappa.find(v);
    if (it == kappa.end() || !(it->second > 0.0)) {
      throw InvalidCountingNumbersError(
          "region graph: every vertex needs kappa > 0");
    }
  }
  for (const auto& [parent, child] : edges) {
    if (!vset.count(parent) || !vset.count(child)) {
      throw InvalidArgumentError("region graph: edge endpoint not a vertex");
    }
    if (parent == child || !child.subset_of(parent)) {
      throw InvalidArgumentError(
          "region graph: edge child must be a strict subset of parent");
    }
  }
  return RegionGraph(std::move(domain), std::move(vertices), std::move(edges),
                     std::move(kappa));
}

bool RegionGraph::has_vertex(const Clique& clique) const {
  return std::binary_search(vertices_.begin(), vertices_.end(), clique);
}

double RegionGraph::kappa(const Clique& vertex) const {
  auto it = kappa_.find(vertex);
  if (it == kappa_.end()) {
    throw InvalidArgumentError("region graph: unknown vertex");
  }
  return it->second;
}

RegionGraph RegionGraph::with_uniform_kappa(double value) const {
  if (!(value > 0.0)) {
    throw InvalidCountingNumbersError("kappa must be positive");
  }
  std::map<Clique, double> kappa;
  for (const auto& v : vertices_) kappa[v] = value;
  return RegionGraph(domain_, vertices_, edges_, std::move(kappa));
}

const std::vector<Clique>& RegionGraph::parents(const Clique& vertex) const {
  auto it = parents_.find(vertex);
  if (it == parents_.end()) {
    throw InvalidArgumentError("region graph: unknown vertex");
  }
  return it->second;
}

const std::vector<Clique>& RegionGraph::children(const Clique& vertex) const {
  auto it = children_.find(vertex);
  if (it == children_.end()) {
    throw InvalidArgumentError("region graph: unknown vertex");
  }
  return it->second;
}

bool RegionGraph::supports(const Clique& clique) const {
  for (const auto& v : vertices_) {
    if (clique.subset_of(v)) return true;
  }
  return false;
}

bool RegionGraph::supports_all(const std::vector<Clique>& cliques) const {
  for (const auto& c : cliques) {
    if (!supports(c)) return false;
  }
  return true;
}

std::optional<Clique> RegionGraph::smallest_containing_vertex(
    const Clique& clique) const {
  std::optional<Clique> best;
  for (const auto& v : vertices_) {
    if (!clique.subset_of(v)) continue;
    if (!best || v.size() < best->size() ||
        (v.size() == best->size() && v < *best)) {
      best = v;
    }
  }
  return best;
}

ConsistencyReport check_local_consistency(const CliqueVector& tau,
                                          const RegionGraph& graph,
                                          double tol) {
  ConsistencyReport report;
  report.tol = tol;
  double min_entry = std::numeric_limits<double>::infinity();
  for (const auto& v : graph.vertices()) {
    const Factor& f = tau.at(v);  // throws IncompleteVectorError when absent
    report.normalization_violations[v] = std::abs(f.sum() - 1.0);
    min_entry = std::min(min_entry, f.values().minCoeff());
  }
  for (const auto& edge : graph.edges()) {
    const auto& [parent, child] = edge;
    report.edge_violations[edge] =
        linf_distance(marginalize(tau.at(parent), child), tau.at(child));
  }
  double worst = 0.0;
  for (const auto& [v, g] : report.normalization_violations) {
    worst = std::max(worst, g);
  }
  for (const auto& [e, g] : report.edge_violations) worst = std::max(worst, g);
  report.max_violation = worst;
  report.min_entry = min_entry;
  report.consistent = worst <= tol && min_entry >= -tol;
  return report;
}

}  // namespace privmarg
