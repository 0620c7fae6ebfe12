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

#include "privmarg/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace privmarg {

double power_iteration_lmax(const Eigen::MatrixXd& A) {
  const Eigen::Index n = A.rows();
  if (n == 0) return 0.0;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = 1.0 + 0.01 * static_cast<double>(i);  // break symmetric ties
  }
  v.normalize();
  double lambda = 0.0;
  for (int iter = 0; iter < 10000; ++iter) {
    Eigen::VectorXd w = A * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = w.dot(A * w);
    const bool done = std::abs(next - lambda) <= 1e-6 * std::max(1.0, next);
    lambda = next;
    v = std::move(w);
    if (done && iter > 2) break;
  }
  return lambda;
}

L2Loss::L2Loss(DomainPtr domain, std::vector<Measurement> measurements)
    : domain_(std::move(domain)), measurements_(std::move(measurements)) {
  std::map<Clique, double> per_clique;
  for (const auto& meas : measurements_) {
    if (!meas.clique.valid_for(*domain_)) {
      throw InvalidCliqueError("l2 loss: clique not valid for domain");
    }
    if (!(meas.noise_scale > 0.0)) {
      throw InvalidArgumentError("l2 loss: noise scale must be positive");
    }
    const std::int64_t n_r = *domain_->cell_count(meas.clique);
    double qtq_lmax = 1.0;  // identity query
    if (meas.query) {
      if (meas.query->cols() != n_r) {
        throw InvalidArgumentError("l2 loss: query column count mismatch");
      }
      if (meas.query->rows() != meas.answers.size()) {
        throw InvalidArgumentError("l2 loss: answers length mismatch");
      }
      qtq_lmax = power_iteration_lmax(meas.query->transpose() * *meas.query);
    } else if (meas.answers.size() != n_r) {
      throw InvalidArgumentError("l2 loss: answers length mismatch");
    }
    const double w = 2.0 / (meas.noise_scale * meas.noise_scale);
    per_clique[meas.clique] += w * qtq_lmax;
  }
  for (const auto& [clique, bound] : per_clique) {
    cliques_.push_back(clique);
    lipschitz_ = std::max(lipschitz_, bound);
  }
}

double L2Loss::value(const CliqueVector& tau) const {
  double total = 0.0;
  for (const auto& meas : measurements_) {
    const Factor& t = tau.at(meas.clique);
    const Eigen::VectorXd mu = t.values().matrix();
    const Eigen::VectorXd resid =
        meas.query ? Eigen::VectorXd(*meas.query * mu - meas.answers)
                   : Eigen::VectorXd(mu - meas.answers);
    total += resid.squaredNorm() / (meas.noise_scale * meas.noise_scale);
  }
  return total;
}

CliqueVector L2Loss::gradient(const CliqueVector& tau) const {
  CliqueVector grad;
  for (const auto& c : cliques_) {
    grad.set(Factor::zeros(domain_, c));
  }
  for (const auto& meas : measurements_) {
    const Factor& t = tau.at(meas.clique);
    const Eigen::VectorXd mu = t.values().matrix();
    const double w = 2.0 / (meas.noise_scale * meas.noise_scale);
    Eigen::VectorXd g;
    if (meas.query) {
      g = w * (meas.query->transpose() * (*meas.query * mu - meas.answers));
    } else {
      g = w * (mu - meas.answers);
    }
    grad.accumulate(Factor(domain_, meas.clique, g.array()));
  }
  return grad;
}

double default_step_size(const LossFunction& loss) {
  const double lip = loss.lipschitz();
  if (!(lip > 0.0)) {
    throw InvalidArgumentError("default step: lipschitz bound must be > 0");
  }
  return 2.0 / lip;
}

namespace {

// One estimation loop over dense per-vertex arrays: the oracle, the theta
// updates, and the measured-marginal reads all work in the engine's vertex
// order, so nothing is repacked per iteration.
struct DenseLoop {
  const Domain* domain = nullptr;
  DomainPtr domain_ptr;
  std::vector<Clique> cliques;           // measured, in loss order
  std::vector<int> binding_vertex;       // clique -> dense vertex id
  std::vector<const std::vector<std::int64_t>*> binding_project;
  std::map<std::pair<int, Clique>, std::vector<std::int64_t>> project_cache;

  CliqueVector measured(const std::vector<Eigen::ArrayXd>& tau) const {
    CliqueVector out;
    for (size_t i = 0; i < cliques.size(); ++i) {
      const auto& source = tau[static_cast<size_t>(binding_vertex[i])];
      if (binding_project[i] == nullptr) {
        out.set(Factor(domain_ptr, cliques[i], source));
      } else {
        const auto& idx = *binding_project[i];
        Eigen::ArrayXd values =
            Eigen::ArrayXd::Zero(*domain->cell_count(cliques[i]));
        for (std::int64_t cell = 0; cell < source.size(); ++cell) {
          values[idx[static_cast<size_t>(cell)]] += source[cell];
        }
        out.set(Factor(domain_ptr, cliques[i], std::move(values)));
      }
    }
    return out;
  }

  void apply_gradient(const CliqueVector& grad, double step,
                      std::vector<Eigen::ArrayXd>& theta) const {
    for (size_t i = 0; i < cliques.size(); ++i) {
      const auto& g = grad.at(cliques[i]).values();
      auto& target = theta[static_cast<size_t>(binding_vertex[i])];
      if (binding_project[i] == nullptr) {
        target -= step * g;
      } else {
        const auto& idx = *binding_project[i];
        for (std::int64_t cell = 0; cell < target.size(); ++cell) {
          target[cell] -= step * g[idx[static_cast<size_t>(cell)]];
        }
      }
    }
  }
};

double linf_between(const std::vector<Eigen::ArrayXd>& a,
                    const std::vector<Eigen::ArrayXd>& b) {
  double worst = 0.0;
  for (size_t v = 0; v < a.size(); ++v) {
    worst = std::max(worst, (a[v] - b[v]).abs().maxCoeff());
  }
  return worst;
}

}  // namespace

FittedModel prox_pgm(const LossFunction& loss, const RegionGraph& graph,
                     OracleKind oracle, const ProxConfig& config) {
  const auto& domain = graph.domain();
  const double step =
      config.step_size ? *config.step_size : default_step_size(loss);
  if (!(step > 0.0)) {
    throw InvalidArgumentError("prox pgm: step size must be positive");
  }

  // Dense vertex order shared by both oracles.
  const std::vector<Clique>& verts = graph.vertices();
  std::map<Clique, int> vertex_id;
  for (size_t v = 0; v < verts.size(); ++v) {
    vertex_id[verts[v]] = static_cast<int>(v);
  }

  DenseLoop dense;
  dense.domain = &domain;
  dense.domain_ptr = graph.domain_ptr();
  dense.cliques = loss.measured_cliques();
  for (const auto& c : dense.cliques) {
    auto vertex = graph.smallest_containing_vertex(c);
    if (!vertex) {
      throw UnsupportedCliqueError(
          "prox pgm: measured clique not supported by the region graph");
    }
    const int vid = vertex_id.at(*vertex);
    dense.binding_vertex.push_back(vid);
    if (*vertex == c) {
      dense.binding_project.push_back(nullptr);
    } else {
      auto [it, fresh] = dense.project_cache.try_emplace(
          std::make_pair(vid, c), std::vector<std::int64_t>{});
      if (fresh) it->second = projection_index(domain, *vertex, c);
      dense.binding_project.push_back(&it->second);
    }
  }

  std::optional<GbpEngine> engine;
  std::optional<GbpEngine::DenseState> state;
  std::optional<ExactOracle> exact;
  std::vector<int> exact_slot;  // dense vertex id per exact-oracle clique
  if (oracle == OracleKind::kConvexGbp) {
    engine.emplace(graph);
  } else {
    // During iterations only the binding vertices feed the gradient; the
    // full vertex set is extracted once at the end.
    std::set<int> bound(dense.binding_vertex.begin(),
                        dense.binding_vertex.end());
    std::vector<Clique> oracle_cliques;
    for (int vid : bound) {
      oracle_cliques.push_back(verts[static_cast<size_t>(vid)]);
      exact_slot.push_back(vid);
    }
    exact.emplace(graph.domain_ptr(), std::move(oracle_cliques),
                  config.full_table_limit);
  }
  GbpConfig inner = config.gbp;
  inner.max_iters = config.inner_gbp_iters;
  inner.convergence_tol = 0.0;  // fixed sweep count per oracle call

  std::vector<Eigen::ArrayXd> theta(verts.size());
  for (size_t v = 0; v < verts.size(); ++v) {
    theta[v] = Eigen::ArrayXd::Zero(*domain.cell_count(verts[v]));
  }

  CliqueVector theta_cv;  // mirrors theta for the exact oracle
  auto call_oracle = [&](bool first) {
    if (exact) {
      theta_cv = CliqueVector();
      for (size_t v = 0; v < verts.size(); ++v) {
        theta_cv.set(Factor(graph.domain_ptr(), verts[v], theta[v]));
      }
      const CliqueVector marginals = exact->marginals(theta_cv);
      // Only binding-vertex slots are filled during iterations.
      std::vector<Eigen::ArrayXd> tau(verts.size());
      for (size_t i = 0; i < exact_slot.size(); ++i) {
        const size_t vid = static_cast<size_t>(exact_slot[i]);
        tau[vid] = marginals.at(verts[vid]).values();
      }
      return tau;
    }
    if (first || !config.warm_start) state = engine->make_state();
    return engine->run_dense(theta, inner, *state);
  };

  std::vector<Eigen::ArrayXd> tau = call_oracle(true);
  CliqueVector tau_meas = dense.measured(tau);
  const double initial_loss = loss.value(tau_meas);
  std::vector<double> trace{initial_loss};

  for (int iter = 0; iter < config.outer_iters; ++iter) {
    dense.apply_gradient(loss.gradient(tau_meas), step, theta);
    std::vector<Eigen::ArrayXd> tau_next = call_oracle(false);
    tau_meas = dense.measured(tau_next);
    const double value = loss.value(tau_meas);
    trace.push_back(value);
    if (value > 10.0 * initial_loss && value > 1e-12) {
      throw StepSizeTooLargeError(
          "prox pgm: loss exceeded 10x its initial value");
    }
    double delta;
    if (exact) {
      delta = 0.0;
      for (size_t i = 0; i < exact_slot.size(); ++i) {
        const size_t vid = static_cast<size_t>(exact_slot[i]);
        delta = std::max(delta,
                         (tau_next[vid] - tau[vid]).abs().maxCoeff());
      }
    } else {
      delta = linf_between(tau_next, tau);
    }
    tau = std::move(tau_next);
    if (delta < config.convergence_tol) break;
  }

  if (engine && config.final_polish && config.polish_iters > 0) {
    GbpConfig polish = config.gbp;
    polish.max_iters = config.polish_iters;
    polish.convergence_tol = config.gbp.convergence_tol > 0.0
                                 ? std::min(config.gbp.convergence_tol, 1e-11)
                                 : 1e-11;
    tau = engine->run_dense(theta, polish, *state);
    tau_meas = dense.measured(tau);
    trace.push_back(loss.value(tau_meas));
  }

  FittedModel model{graph, CliqueVector{}, CliqueVector{}, MessageState{},
                    std::move(trace)};
  if (exact) {
    model.tau = ExactOracle(graph.domain_ptr(), verts,
                            config.full_table_limit)
                    .marginals(theta_cv);
  } else {
    for (size_t v = 0; v < verts.size(); ++v) {
      model.tau.set(Factor(graph.domain_ptr(), verts[v], std::move(tau[v])));
    }
    model.messages = engine->export_state(*state);
  }
  for (size_t v = 0; v < verts.size(); ++v) {
    model.theta.set(Factor(graph.domain_ptr(), verts[v], std::move(theta[v])));
  }
  return model;
}

}  // namespace privmarg
