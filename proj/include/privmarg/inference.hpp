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
#include <map>
#include <vector>

#include "privmarg/dataset.hpp"
#include "privmarg/region_graph.hpp"

namespace privmarg {

// Log-space messages of the convex message-passing scheme. For an edge
// (r -> t), m_msgs holds the parent-to-child message m_{r->t} and lambda_msgs
// the child-to-parent message lambda_{t->r}; both live on the child's
// sub-domain. kappa_ratios holds kappa_r / (kappa_t + sum of kappa over t's
// parents) per edge.
struct MessageState {
  std::map<Edge, Factor> m_msgs;
  std::map<Edge, Factor> lambda_msgs;
  std::map<Edge, double> kappa_ratios;
};

struct GbpConfig {
  int max_iters = 200;
  // Mixing weight on the previous lambda message, in [0, 1).
  double damping = 0.5;
  // Stop when the L-infinity change of beliefs between sweeps drops below
  // this; 0 disables early exit.
  double convergence_tol = 1e-8;
};

struct GbpResult {
  CliqueVector tau;
  MessageState state;
  int sweeps = 0;
  double last_delta = 0.0;
};

// Reusable message-passing engine for one region graph. Builds the edge
// ordering, kappa ratios, and cross-clique index tables once; run() may then
// be called repeatedly (warm-started or cold). A run mutates only its own
// message buffers, so distinct runs on distinct states may proceed
// concurrently.
//
// Long-lived callers (the estimation loop) keep a DenseState across calls:
// repacking messages into keyed maps every iteration would otherwise
// dominate the sweep cost on large graphs.
class GbpEngine {
 public:
  explicit GbpEngine(const RegionGraph& graph);

  // Messages in engine edge order; beliefs in engine vertex order.
  struct DenseState {
    std::vector<Eigen::ArrayXd> m;
    std::vector<Eigen::ArrayXd> lambda;
  };

  // Vertices in the engine's dense order (sorted cliques).
  const std::vector<Clique>& vertices() const { return verts_; }
  const RegionGraph& graph() const { return *graph_; }

  DenseState make_state(const MessageState* warm = nullptr) const;
  MessageState export_state(const DenseState& state) const;

  // Sweeps the state in place; theta is indexed by dense vertex order and
  // beliefs come back the same way. Returns the number of sweeps run and the
  // final belief change through the out-parameters.
  std::vector<Eigen::ArrayXd> run_dense(
      const std::vector<Eigen::ArrayXd>& theta, const GbpConfig& config,
      DenseState& state, int* sweeps = nullptr,
      double* last_delta = nullptr) const;

  // theta supplies log-potentials per vertex; missing vertices are treated as
  // zeros. When warm is null, messages start at zero.
  GbpResult run(const CliqueVector& theta, const GbpConfig& config,
                const MessageState* warm = nullptr) const;

 private:
  struct EdgeInfo {
    int parent = 0;
    int child = 0;
    double kappa_ratio = 0.0;
    std::vector<std::int64_t> project;  // parent cell -> child cell
  };

  const RegionGraph* graph_;
  std::vector<Clique> verts_;
  std::vector<double> kappa_;
  std::vector<std::int64_t> cells_;
  std::vector<EdgeInfo> edges_;                 // sorted by (parent, child)
  std::vector<std::vector<int>> child_edges_;   // vertex -> edge ids (as parent)
  std::vector<std::vector<int>> parent_edges_;  // vertex -> edge ids (as child)
};

// One-shot convenience wrapper around GbpEngine.
GbpResult convex_gbp(const RegionGraph& graph, const CliqueVector& theta,
                     const GbpConfig& config,
                     const MessageState* warm = nullptr);

// -tau.theta - sum_r kappa_r H(tau_r); theta entries missing from the vector
// count as zeros.
double free_energy(const CliqueVector& tau, const CliqueVector& theta,
                   const RegionGraph& graph);

// Brute-force marginal oracle: materialises p(x) proportional to
// exp(sum_r theta_r(x_r)) over the full table and projects it onto the
// requested cliques. Only valid within the full-table limit.
class ExactOracle {
 public:
  ExactOracle(DomainPtr domain, std::vector<Clique> cliques,
              std::int64_t full_table_limit = kDefaultFullTableLimit);

  CliqueVector marginals(const CliqueVector& theta) const;
  // The normalised full table itself.
  Factor full_table(const CliqueVector& theta) const;

 private:
  DomainPtr domain_;
  Clique full_;
  std::vector<Clique> cliques_;
  // Full-table cell -> clique cell, per clique (int32 keeps the cache small).
  std::vector<std::vector<std::int32_t>> project_;
};

CliqueVector exact_oracle(const CliqueVector& theta, DomainPtr domain,
                          const std::vector<Clique>& cliques,
                          std::int64_t full_table_limit = kDefaultFullTableLimit);

}  // namespace privmarg
