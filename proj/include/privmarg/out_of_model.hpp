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

#include "privmarg/estimation.hpp"

namespace privmarg {

// Entropic-mirror-descent settings for out-of-model queries. The step rule
// backtracks from 1.0, halving until the Armijo-style sufficient decrease
// holds; iteration stops when the step-1 multiplicative update moves tau by
// less than grad_tol.
struct OomConfig {
  int max_iters = 5000;
  double grad_tol = 1e-8;
  double armijo = 1e-4;
};

// Total squared violation of the model's overlap constraints by tau_r:
// sum over model vertices u (s = u intersect r) of
// ||P_{r->s} tau_r - P_{u->s} tau_u||^2, with its gradient in tau_r.
struct ViolationObjective {
  double value = 0.0;
  Factor gradient;
};

ViolationObjective violation_objective(const Factor& tau_r,
                                       const CliqueVector& model_tau,
                                       const Clique& r);

// Minimises the constraint violation against the given marginals over the
// simplex of r by entropic mirror descent from the uniform start, whose
// iterate path selects the maximum-entropy minimiser.
Factor max_entropy_completion(const CliqueVector& model_tau, const Clique& r,
                              const DomainPtr& domain,
                              const OomConfig& config = {});

// Marginal of the fitted model on r. In-model cliques read the sub-marginal
// of the smallest containing vertex; out-of-model cliques solve the
// violation-minimisation problem above.
Factor infer_marginal(const FittedModel& model, const Clique& r,
                      const OomConfig& config = {});

// Per-clique L1 distance between inferred marginals and the empirical
// marginals of `truth`.
std::map<Clique, double> evaluate_marginals(const FittedModel& model,
                                            const Dataset& truth,
                                            const std::vector<Clique>& cliques,
                                            const OomConfig& config = {});

}  // namespace privmarg
