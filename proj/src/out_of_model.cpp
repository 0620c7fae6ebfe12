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

#include "privmarg/out_of_model.hpp"

#include <cmath>

namespace privmarg {

ViolationObjective violation_objective(const Factor& tau_r,
                                       const CliqueVector& model_tau,
                                       const Clique& r) {
  ViolationObjective out{0.0, Factor::zeros(tau_r.domain_ptr(), r)};
  for (const auto& [u, tau_u] : model_tau) {
    const Clique s = u.intersect(r);
    Factor resid = marginalize(tau_r, s) - marginalize(tau_u, s);
    out.value += resid.values().square().sum();
    resid *= 2.0;
    out.gradient += expand(resid, r);
  }
  return out;
}

namespace {

// The objective of violation_objective grouped by overlap clique s:
// sum_s [ count_s ||a_s||^2 - 2 a_s.b_sum_s + const_s ] with a_s the
// projection of tau_r onto s. Same math, one pass per distinct s.
struct GroupedViolation {
  struct Term {
    Clique s;
    double count = 0.0;
    Eigen::ArrayXd target_sum;     // sum of P_{u->s} tau_u over matching u
    double target_sq_sum = 0.0;    // sum of ||P_{u->s} tau_u||^2
    std::vector<std::int64_t> project;  // r cell -> s cell
  };

  GroupedViolation(const CliqueVector& model_tau, const Clique& r,
                   const Domain& domain) {
    std::map<Clique, size_t> slot;
    for (const auto& [u, tau_u] : model_tau) {
      const Clique s = u.intersect(r);
      auto [it, fresh] = slot.try_emplace(s, terms.size());
      if (fresh) {
        Term term;
        term.s = s;
        term.count = 0.0;
        term.target_sum = Eigen::ArrayXd::Zero(*domain.cell_count(s));
        term.project = projection_index(domain, r, s);
        terms.push_back(std::move(term));
      }
      Term& term = terms[it->second];
      const Eigen::ArrayXd b = marginalize(tau_u, s).values();
      term.count += 1.0;
      term.target_sum += b;
      term.target_sq_sum += b.square().sum();
    }
  }

  double value(const Eigen::ArrayXd& tau) const {
    double total = 0.0;
    for (const auto& term : terms) {
      Eigen::ArrayXd a = Eigen::ArrayXd::Zero(term.target_sum.size());
      for (std::int64_t i = 0; i < tau.size(); ++i) {
        a[term.project[static_cast<size_t>(i)]] += tau[i];
      }
      total += term.count * a.square().sum() - 2.0 * (a * term.target_sum).sum() +
               term.target_sq_sum;
    }
    return total;
  }

  Eigen::ArrayXd gradient(const Eigen::ArrayXd& tau) const {
    Eigen::ArrayXd grad = Eigen::ArrayXd::Zero(tau.size());
    for (const auto& term : terms) {
      Eigen::ArrayXd a = Eigen::ArrayXd::Zero(term.target_sum.size());
      for (std::int64_t i = 0; i < tau.size(); ++i) {
        a[term.project[static_cast<size_t>(i)]] += tau[i];
      }
      const Eigen::ArrayXd g = 2.0 * (term.count * a - term.target_sum);
      for (std::int64_t i = 0; i < tau.size(); ++i) {
        grad[i] += g[term.project[static_cast<size_t>(i)]];
      }
    }
    return grad;
  }

  std::vector<Term> terms;
};

Eigen::ArrayXd multiplicative_step(const Eigen::ArrayXd& tau,
                                   const Eigen::ArrayXd& grad, double step) {
  Eigen::ArrayXd z = tau.max(1e-300).log() - step * grad;
  Eigen::ArrayXd e = (z - z.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

Factor max_entropy_completion(const CliqueVector& model_tau, const Clique& r,
                              const DomainPtr& domain,
                              const OomConfig& config) {
  const GroupedViolation objective(model_tau, r, *domain);
  const std::int64_t n_r = *domain->cell_count(r);
  Eigen::ArrayXd tau =
      Eigen::ArrayXd::Constant(n_r, 1.0 / static_cast<double>(n_r));
  double value = objective.value(tau);
  for (int iter = 0; iter < config.max_iters; ++iter) {
    const Eigen::ArrayXd grad = objective.gradient(tau);
    const Eigen::ArrayXd probe = multiplicative_step(tau, grad, 1.0);
    if (std::sqrt((tau - probe).square().sum()) <= config.grad_tol) break;
    const double grad_sq = grad.square().sum();
    double step = 1.0;
    Eigen::ArrayXd next = probe;
    double next_value = objective.value(next);
    while (next_value > value - config.armijo * step * grad_sq) {
      step *= 0.5;
      if (step < 1e-20) break;
      next = multiplicative_step(tau, grad, step);
      next_value = objective.value(next);
    }
    if (step < 1e-20) break;
    tau = std::move(next);
    value = next_value;
  }
  return Factor(domain, r, std::move(tau));
}

Factor infer_marginal(const FittedModel& model, const Clique& r,
                      const OomConfig& config) {
  const auto& domain = model.graph.domain();
  if (!r.valid_for(domain)) {
    throw InvalidCliqueError("infer_marginal: clique not valid for domain");
  }
  if (auto vertex = model.graph.smallest_containing_vertex(r)) {
    return marginalize(model.tau.at(*vertex), r);
  }
  return max_entropy_completion(model.tau, r, model.graph.domain_ptr(),
                                config);
}

std::map<Clique, double> evaluate_marginals(const FittedModel& model,
                                            const Dataset& truth,
                                            const std::vector<Clique>& cliques,
                                            const OomConfig& config) {
  std::map<Clique, double> errors;
  for (const auto& c : cliques) {
    errors[c] =
        l1_distance(infer_marginal(model, c, config), dataset_project(truth, c));
  }
  return errors;
}

}  // namespace privmarg
