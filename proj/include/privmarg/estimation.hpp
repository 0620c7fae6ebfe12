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
#include <optional>
#include <vector>

#include "privmarg/inference.hpp"

namespace privmarg {

// One noisy linear view of a clique marginal: answers = Q mu_r + noise, with
// Q the identity when absent. noise_scale is the standard deviation of the
// additive noise in normalised-marginal units.
struct Measurement {
  Clique clique;
  std::optional<Eigen::MatrixXd> query;  // rows x n_r
  Eigen::VectorXd answers;
  double noise_scale = 1.0;
};

// Convex loss over clique marginals with a gradient per measured clique.
class LossFunction {
 public:
  virtual ~LossFunction() = default;
  // tau must contain a factor for every measured clique.
  virtual double value(const CliqueVector& tau) const = 0;
  virtual CliqueVector gradient(const CliqueVector& tau) const = 0;
  virtual double lipschitz() const = 0;
  virtual const std::vector<Clique>& measured_cliques() const = 0;
};

// L(tau) = sum over measurements of ||Q tau_r - y||^2 / sigma^2. The
// Lipschitz bound is the largest per-clique constant (per-clique gradients
// are separable across cliques).
class L2Loss final : public LossFunction {
 public:
  L2Loss(DomainPtr domain, std::vector<Measurement> measurements);

  double value(const CliqueVector& tau) const override;
  CliqueVector gradient(const CliqueVector& tau) const override;
  double lipschitz() const override { return lipschitz_; }
  const std::vector<Clique>& measured_cliques() const override {
    return cliques_;
  }
  const std::vector<Measurement>& measurements() const {
    return measurements_;
  }
  const DomainPtr& domain_ptr() const { return domain_; }

 private:
  DomainPtr domain_;
  std::vector<Measurement> measurements_;
  std::vector<Clique> cliques_;  // deduplicated, sorted
  double lipschitz_ = 0.0;
};

// Constant step 2 / lipschitz.
double default_step_size(const LossFunction& loss);

// Largest eigenvalue of the symmetric PSD matrix A by power iteration,
// converged to 1e-6 relative.
double power_iteration_lmax(const Eigen::MatrixXd& A);

struct ProxConfig {
  int outer_iters = 1000;
  // Constant step size; when absent the 2/Lipschitz default applies.
  std::optional<double> step_size;
  int inner_gbp_iters = 1;
  bool warm_start = true;
  GbpConfig gbp;
  // Outer loop stops early when the L-infinity change of tau drops below
  // this.
  double convergence_tol = 1e-7;
  // After the outer loop, run message passing to convergence at the final
  // parameters so the returned beliefs are locally consistent. Warm-started
  // single-sweep oracle calls otherwise leave an O(step) consistency lag:
  // the parameters keep drifting along directions the beliefs cannot see,
  // and the messages trail them.
  bool final_polish = true;
  int polish_iters = 2000;
  std::int64_t full_table_limit = kDefaultFullTableLimit;
};

enum class OracleKind { kExact, kConvexGbp };

// Result of estimation: region graph, fitted pseudo-marginals and
// parameters, final message state (empty for the exact oracle), and the loss
// value at every outer iteration.
struct FittedModel {
  RegionGraph graph;
  CliqueVector tau;
  CliqueVector theta;
  MessageState messages;
  std::vector<double> loss_trace;
};

// Mirror-descent estimation: iterates theta -= step * grad L(tau) with tau
// refreshed by the marginal oracle. Measurements on sub-cliques of vertices
// are evaluated through the smallest containing vertex.
FittedModel prox_pgm(const LossFunction& loss, const RegionGraph& graph,
                     OracleKind oracle, const ProxConfig& config);

}  // namespace privmarg
