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

#include "privmarg/inference.hpp"

#include <cmath>
#include <limits>

namespace privmarg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Grouped log-sum-exp with max subtraction, scaled by kappa; mx and acc are
// caller scratch of the output size.
void grouped_logsumexp(const Eigen::Ref<const Eigen::ArrayXd>& in,
                       const std::vector<std::int64_t>& project, double kappa,
                       Eigen::Ref<Eigen::ArrayXd> out,
                       Eigen::Ref<Eigen::ArrayXd> mx,
                       Eigen::Ref<Eigen::ArrayXd> acc) {
  const std::int64_t out_size = out.size();
  mx.setConstant(kNegInf);
  for (std::int64_t i = 0; i < in.size(); ++i) {
    const std::int64_t j = project[static_cast<size_t>(i)];
    if (in[i] > mx[j]) mx[j] = in[i];
  }
  acc.setZero();
  for (std::int64_t i = 0; i < in.size(); ++i) {
    const std::int64_t j = project[static_cast<size_t>(i)];
    if (mx[j] != kNegInf) acc[j] += std::exp(in[i] - mx[j]);
  }
  for (std::int64_t j = 0; j < out_size; ++j) {
    out[j] = (mx[j] == kNegInf) ? kNegInf : kappa * (mx[j] + std::log(acc[j]));
  }
}

void add_expanded(Eigen::Ref<Eigen::ArrayXd> target,
                  const Eigen::Ref<const Eigen::ArrayXd>& source,
                  const std::vector<std::int64_t>& project, double sign) {
  for (std::int64_t i = 0; i < target.size(); ++i) {
    target[i] += sign * source[project[static_cast<size_t>(i)]];
  }
}

Eigen::ArrayXd softmax(const Eigen::ArrayXd& log_values) {
  Eigen::ArrayXd e = (log_values - log_values.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

GbpEngine::GbpEngine(const RegionGraph& graph) : graph_(&graph) {
  verts_ = graph.vertices();
  const auto& domain = graph.domain();
  std::map<Clique, int> index;
  for (size_t i = 0; i < verts_.size(); ++i) {
    index[verts_[i]] = static_cast<int>(i);
    kappa_.push_back(graph.kappa(verts_[i]));
    cells_.push_back(*domain.cell_count(verts_[i]));
    if (!(kappa_.back() > 0.0)) {
      throw InvalidCountingNumbersError("convex gbp needs kappa > 0");
    }
  }
  child_edges_.resize(verts_.size());
  parent_edges_.resize(verts_.size());
  for (const auto& [parent, child] : graph.edges()) {
    EdgeInfo info;
    info.parent = index.at(parent);
    info.child = index.at(child);
    double denom = graph.kappa(child);
    for (const auto& p : graph.parents(child)) denom += graph.kappa(p);
    info.kappa_ratio = graph.kappa(parent) / denom;
    info.project = projection_index(domain, parent, child);
    const int e = static_cast<int>(edges_.size());
    child_edges_[static_cast<size_t>(info.parent)].push_back(e);
    parent_edges_[static_cast<size_t>(info.child)].push_back(e);
    edges_.push_back(std::move(info));
  }
}

GbpEngine::DenseState GbpEngine::make_state(const MessageState* warm) const {
  const size_t ne = edges_.size();
  DenseState state;
  state.m.resize(ne);
  state.lambda.resize(ne);
  for (size_t e = 0; e < ne; ++e) {
    const std::int64_t n_child = cells_[static_cast<size_t>(edges_[e].child)];
    if (warm) {
      const Edge key{verts_[static_cast<size_t>(edges_[e].parent)],
                     verts_[static_cast<size_t>(edges_[e].child)]};
      auto mi = warm->m_msgs.find(key);
      auto li = warm->lambda_msgs.find(key);
      if (mi == warm->m_msgs.end() || li == warm->lambda_msgs.end() ||
          mi->second.cell_count() != n_child ||
          li->second.cell_count() != n_child) {
        throw InvalidArgumentError("gbp: warm state does not match graph");
      }
      state.m[e] = mi->second.values();
      state.lambda[e] = li->second.values();
    } else {
      state.m[e] = Eigen::ArrayXd::Zero(n_child);
      state.lambda[e] = Eigen::ArrayXd::Zero(n_child);
    }
  }
  return state;
}

MessageState GbpEngine::export_state(const DenseState& state) const {
  MessageState out;
  for (size_t e = 0; e < edges_.size(); ++e) {
    const Clique& parent = verts_[static_cast<size_t>(edges_[e].parent)];
    const Clique& child = verts_[static_cast<size_t>(edges_[e].child)];
    const Edge key{parent, child};
    out.m_msgs.emplace(key, Factor(graph_->domain_ptr(), child, state.m[e]));
    out.lambda_msgs.emplace(
        key, Factor(graph_->domain_ptr(), child, state.lambda[e]));
    out.kappa_ratios.emplace(key, edges_[e].kappa_ratio);
  }
  return out;
}

std::vector<Eigen::ArrayXd> GbpEngine::run_dense(
    const std::vector<Eigen::ArrayXd>& theta, const GbpConfig& config,
    DenseState& state, int* sweeps_out, double* last_delta_out) const {
  if (config.damping < 0.0 || config.damping >= 1.0) {
    throw InvalidArgumentError("gbp: damping must lie in [0, 1)");
  }
  const size_t nv = verts_.size();
  const size_t ne = edges_.size();
  if (theta.size() != nv || state.m.size() != ne ||
      state.lambda.size() != ne) {
    throw InvalidArgumentError("gbp: dense sizes do not match the graph");
  }
  auto& m = state.m;
  auto& lam = state.lambda;

  // Per-vertex aggregates: inbound child->parent messages (expanded onto the
  // vertex), outbound child->parent messages, inbound parent->child messages.
  std::vector<Eigen::ArrayXd> lam_in(nv), lam_out(nv), m_in(nv);
  auto refresh_aggregates = [&]() {
    for (size_t v = 0; v < nv; ++v) {
      lam_in[v].setZero(cells_[v]);
      lam_out[v].setZero(cells_[v]);
      m_in[v].setZero(cells_[v]);
    }
    for (size_t e = 0; e < ne; ++e) {
      const auto& info = edges_[e];
      add_expanded(lam_in[static_cast<size_t>(info.parent)], lam[e],
                   info.project, 1.0);
      lam_out[static_cast<size_t>(info.child)] += lam[e];
      m_in[static_cast<size_t>(info.child)] += m[e];
    }
  };

  auto extract_beliefs = [&](std::vector<Eigen::ArrayXd>& tau) {
    tau.resize(nv);
    for (size_t v = 0; v < nv; ++v) {
      tau[v] = softmax((theta[v] + lam_in[v] - lam_out[v]) / kappa_[v]);
    }
  };

  refresh_aggregates();
  std::vector<Eigen::ArrayXd> tau;
  extract_beliefs(tau);

  // Scratch reused across edges and sweeps.
  std::int64_t max_cells = 1;
  for (auto c : cells_) max_cells = std::max(max_cells, c);
  Eigen::ArrayXd pre(max_cells), m_new(max_cells), lam_new(max_cells),
      mx(max_cells), acc(max_cells);

  int sweeps = 0;
  double last_delta = std::numeric_limits<double>::infinity();
  const double alpha = config.damping;
  std::vector<Eigen::ArrayXd> tau_new;
  for (int sweep = 0; sweep < config.max_iters; ++sweep) {
    for (size_t e = 0; e < ne; ++e) {
      const auto& info = edges_[e];
      const size_t r = static_cast<size_t>(info.parent);
      const size_t t = static_cast<size_t>(info.child);
      const double kr = kappa_[r];
      const std::int64_t n_r = cells_[r];
      const std::int64_t n_t = cells_[t];

      // m_{r->t}: marginalise the parent's current belief field, excluding
      // the lambda inbound from t itself.
      pre.head(n_r) = theta[r] + lam_in[r] - lam_out[r];
      add_expanded(pre.head(n_r), lam[e], info.project, -1.0);
      pre.head(n_r) /= kr;
      grouped_logsumexp(pre.head(n_r), info.project, kr, m_new.head(n_t),
                        mx.head(n_t), acc.head(n_t));
      m_in[t] += m_new.head(n_t) - m[e];
      m[e] = m_new.head(n_t);

      // lambda_{t->r}: redistribute the child's belief field.
      lam_new.head(n_t) =
          info.kappa_ratio * (theta[t] + lam_in[t] + m_in[t]) - m[e];
      if (alpha > 0.0) {
        lam_new.head(n_t) =
            (1.0 - alpha) * lam_new.head(n_t) + alpha * lam[e];
      }
      pre.head(n_t) = lam_new.head(n_t) - lam[e];  // the change
      add_expanded(lam_in[r], pre.head(n_t), info.project, 1.0);
      lam_out[t] += pre.head(n_t);
      lam[e] = lam_new.head(n_t);
    }
    // Fresh aggregates make beliefs (and the next sweep) a pure function of
    // the message state, which also keeps warm restarts bit-identical.
    refresh_aggregates();
    extract_beliefs(tau_new);
    last_delta = 0.0;
    for (size_t v = 0; v < nv; ++v) {
      last_delta =
          std::max(last_delta, (tau_new[v] - tau[v]).abs().maxCoeff());
    }
    std::swap(tau, tau_new);
    sweeps = sweep + 1;
    if (config.convergence_tol > 0.0 && last_delta < config.convergence_tol) {
      break;
    }
  }

  if (sweeps_out) *sweeps_out = sweeps;
  if (last_delta_out) *last_delta_out = last_delta;
  return tau;
}

GbpResult GbpEngine::run(const CliqueVector& theta, const GbpConfig& config,
                         const MessageState* warm) const {
  const size_t nv = verts_.size();
  std::vector<Eigen::ArrayXd> th(nv);
  for (size_t v = 0; v < nv; ++v) {
    if (theta.contains(verts_[v])) {
      th[v] = theta.at(verts_[v]).values();
    } else {
      th[v] = Eigen::ArrayXd::Zero(cells_[v]);
    }
  }
  DenseState state = make_state(warm);
  GbpResult result;
  const std::vector<Eigen::ArrayXd> tau =
      run_dense(th, config, state, &result.sweeps, &result.last_delta);
  for (size_t v = 0; v < nv; ++v) {
    result.tau.set(Factor(graph_->domain_ptr(), verts_[v], tau[v]));
  }
  result.state = export_state(state);
  return result;
}

GbpResult convex_gbp(const RegionGraph& graph, const CliqueVector& theta,
                     const GbpConfig& config, const MessageState* warm) {
  return GbpEngine(graph).run(theta, config, warm);
}

double free_energy(const CliqueVector& tau, const CliqueVector& theta,
                   const RegionGraph& graph) {
  double energy = 0.0;
  for (const auto& v : graph.vertices()) {
    const Factor& t = tau.at(v);
    if (theta.contains(v)) energy -= t.dot(theta.at(v));
    energy -= graph.kappa(v) * entropy(t);
  }
  return energy;
}

ExactOracle::ExactOracle(DomainPtr domain, std::vector<Clique> cliques,
                         std::int64_t full_table_limit)
    : domain_(std::move(domain)),
      full_(full_clique(*domain_)),
      cliques_(std::move(cliques)) {
  const auto n = domain_->cell_count(full_);
  if (!n || *n > full_table_limit) {
    throw TableTooLargeError("exact oracle: domain exceeds full-table limit");
  }
  // Cache full-table projection indices while the cache stays modest;
  // otherwise marginals fall back to in-place index walks.
  constexpr std::int64_t kCacheBudgetBytes = 256LL << 20;
  const std::int64_t need =
      *n * static_cast<std::int64_t>(cliques_.size()) * 4;
  if (need <= kCacheBudgetBytes) {
    project_.reserve(cliques_.size());
    for (const auto& c : cliques_) {
      auto idx = projection_index(*domain_, full_, c);
      project_.emplace_back(idx.begin(), idx.end());
    }
  }
}

Factor ExactOracle::full_table(const CliqueVector& theta) const {
  const std::int64_t n = *domain_->cell_count(full_);
  Eigen::ArrayXd logp = Eigen::ArrayXd::Zero(n);
  for (const auto& [clique, factor] : theta) {
    if (!clique.valid_for(*domain_)) {
      throw InvalidCliqueError("exact oracle: theta clique out of domain");
    }
    if ((factor.values() == 0.0).all()) continue;
    const auto& v = factor.values();
    // Reuse the cached output index when this clique is one of ours.
    const std::vector<std::int32_t>* cached = nullptr;
    if (!project_.empty()) {
      for (size_t k = 0; k < cliques_.size(); ++k) {
        if (cliques_[k] == clique) {
          cached = &project_[k];
          break;
        }
      }
    }
    if (cached) {
      for (std::int64_t i = 0; i < n; ++i) {
        logp[i] += v[(*cached)[static_cast<size_t>(i)]];
      }
    } else {
      const auto idx = projection_index(*domain_, full_, clique);
      for (std::int64_t i = 0; i < n; ++i) {
        logp[i] += v[idx[static_cast<size_t>(i)]];
      }
    }
  }
  return Factor(domain_, full_, softmax(logp));
}

CliqueVector ExactOracle::marginals(const CliqueVector& theta) const {
  const Factor p = full_table(theta);
  const auto& pv = p.values();
  CliqueVector out;
  for (size_t k = 0; k < cliques_.size(); ++k) {
    const Clique& c = cliques_[k];
    Factor f = Factor::zeros(domain_, c);
    auto& fv = f.mutable_values();
    if (!project_.empty()) {
      const auto& idx = project_[k];
      for (std::int64_t i = 0; i < pv.size(); ++i) {
        fv[idx[static_cast<size_t>(i)]] += pv[i];
      }
    } else {
      f = marginalize(p, c);
    }
    out.set(std::move(f));
  }
  return out;
}

CliqueVector exact_oracle(const CliqueVector& theta, DomainPtr domain,
                          const std::vector<Clique>& cliques,
                          std::int64_t full_table_limit) {
  return ExactOracle(std::move(domain), cliques, full_table_limit)
      .marginals(theta);
}

}  // namespace privmarg
