#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>

namespace privmarg::testing {

SubsetIndexer::SubsetIndexer(const std::vector<int>& sizes,
                             const std::vector<int>& subset)
    : sizes_(sizes), subset_(subset) {
  full_strides_.assign(sizes.size(), 1);
  for (size_t a = sizes.size(); a-- > 1;) {
    full_strides_[a - 1] = full_strides_[a] * sizes[a];
  }
  for (int s : sizes) full_cells_ *= s;
  subset_strides_.assign(subset.size(), 1);
  for (size_t k = subset.size(); k-- > 1;) {
    subset_strides_[k - 1] =
        subset_strides_[k] * sizes[static_cast<size_t>(subset[k])];
  }
  for (int a : subset) subset_cells_ *= sizes[static_cast<size_t>(a)];
}

std::int64_t SubsetIndexer::map(std::int64_t full_cell) const {
  std::int64_t out = 0;
  for (size_t k = 0; k < subset_.size(); ++k) {
    const auto a = static_cast<size_t>(subset_[k]);
    const std::int64_t digit = (full_cell / full_strides_[a]) % sizes_[a];
    out += digit * subset_strides_[k];
  }
  return out;
}

Eigen::VectorXd brute_marginal(const Eigen::VectorXd& table,
                               const std::vector<int>& sizes,
                               const std::vector<int>& subset) {
  SubsetIndexer indexer(sizes, subset);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(indexer.subset_cells());
  for (std::int64_t i = 0; i < table.size(); ++i) {
    out[indexer.map(i)] += table[i];
  }
  return out;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumulative = 0.0;
  double lambda = 0.0;
  int rho = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += u[static_cast<size_t>(j)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<size_t>(j)] - candidate > 0.0) {
      rho = static_cast<int>(j + 1);
      lambda = candidate;
    }
  }
  (void)rho;
  return (v.array() - lambda).max(0.0).matrix();
}

Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd grad(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd hi = x;
    Eigen::VectorXd lo = x;
    hi[i] += h;
    lo[i] -= h;
    grad[i] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return grad;
}

Eigen::VectorXd full_table_least_squares(const std::vector<int>& sizes,
                                         const std::vector<RawMeasurement>& ms,
                                         int max_iters, double tol) {
  std::int64_t n = 1;
  for (int s : sizes) n *= s;
  std::vector<SubsetIndexer> indexers;
  indexers.reserve(ms.size());
  double lipschitz = 0.0;
  for (const auto& meas : ms) {
    indexers.emplace_back(sizes, meas.subset);
    double qtq = 1.0;
    if (meas.query) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigensolver(
          meas.query->transpose() * *meas.query);
      qtq = eigensolver.eigenvalues().maxCoeff();
    }
    // ||M_r||^2 = n / n_r for the 0/1 marginalisation operator.
    const double mr = static_cast<double>(n) /
                      static_cast<double>(indexers.back().subset_cells());
    lipschitz += 2.0 / (meas.sigma * meas.sigma) * qtq * mr;
  }

  auto gradient = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
    for (size_t k = 0; k < ms.size(); ++k) {
      const auto& meas = ms[k];
      const auto& indexer = indexers[k];
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(indexer.subset_cells());
      for (std::int64_t i = 0; i < n; ++i) mu[indexer.map(i)] += p[i];
      Eigen::VectorXd g_sub;
      const double w = 2.0 / (meas.sigma * meas.sigma);
      if (meas.query) {
        g_sub = w * (meas.query->transpose() *
                     (*meas.query * mu - meas.answers));
      } else {
        g_sub = w * (mu - meas.answers);
      }
      for (std::int64_t i = 0; i < n; ++i) grad[i] += g_sub[indexer.map(i)];
    }
    return grad;
  };

  auto value = [&](const Eigen::VectorXd& p) {
    double total = 0.0;
    for (size_t k = 0; k < ms.size(); ++k) {
      const auto& meas = ms[k];
      const auto& indexer = indexers[k];
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(indexer.subset_cells());
      for (std::int64_t i = 0; i < n; ++i) mu[indexer.map(i)] += p[i];
      const Eigen::VectorXd resid =
          meas.query ? Eigen::VectorXd(*meas.query * mu - meas.answers)
                     : Eigen::VectorXd(mu - meas.answers);
      total += resid.squaredNorm() / (meas.sigma * meas.sigma);
    }
    return total;
  };

  // FISTA with objective restarts; stationarity judged by the gradient
  // mapping at p itself (the momentum iterate can stall transiently).
  Eigen::VectorXd p =
      Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd z = p;
  double t = 1.0;
  double best = value(p);
  for (int iter = 0; iter < max_iters; ++iter) {
    Eigen::VectorXd p_next = project_to_simplex(z - gradient(z) / lipschitz);
    const double next_value = value(p_next);
    if (next_value > best) {  // restart momentum from the last good point
      t = 1.0;
      z = p;
      p_next = project_to_simplex(p - gradient(p) / lipschitz);
      const double mapping = (p_next - p).lpNorm<Eigen::Infinity>();
      best = value(p_next);
      p = std::move(p_next);
      z = p;
      if (mapping < tol && iter > 10) break;
      continue;
    }
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    z = p_next + ((t - 1.0) / t_next) * (p_next - p);
    p = std::move(p_next);
    best = next_value;
    t = t_next;
    if (iter % 64 == 0) {
      const Eigen::VectorXd check =
          project_to_simplex(p - gradient(p) / lipschitz);
      if ((check - p).lpNorm<Eigen::Infinity>() < tol && iter > 10) break;
    }
  }
  return p;
}

namespace {

double entropy_of(const Eigen::VectorXd& x) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > 1e-300) h -= x[i] * std::log(x[i]);
  }
  return h;
}

// Children re-expressed over the parent's local attribute positions.
struct StarProblem {
  std::vector<int> parent_sizes;
  std::vector<SubsetIndexer> indexers;

  StarProblem(const std::vector<int>& sizes, const std::vector<int>& parent,
              const std::vector<StarChild>& kids) {
    for (int a : parent) parent_sizes.push_back(sizes[static_cast<size_t>(a)]);
    for (const auto& kid : kids) {
      std::vector<int> positions;
      for (int a : kid.subset) {
        const auto it = std::find(parent.begin(), parent.end(), a);
        positions.push_back(static_cast<int>(it - parent.begin()));
      }
      indexers.emplace_back(parent_sizes, positions);
    }
  }

  Eigen::VectorXd child_marginal(size_t k, const Eigen::VectorXd& tau) const {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(indexers[k].subset_cells());
    for (std::int64_t i = 0; i < tau.size(); ++i) {
      mu[indexers[k].map(i)] += tau[i];
    }
    return mu;
  }
};

}  // namespace

double star_free_energy_value(const std::vector<int>& sizes,
                              const std::vector<int>& parent,
                              const Eigen::VectorXd& theta_parent,
                              double kappa_parent,
                              const std::vector<StarChild>& kids,
                              const Eigen::VectorXd& tau) {
  const StarProblem problem(sizes, parent, kids);
  double value = -tau.dot(theta_parent) - kappa_parent * entropy_of(tau);
  for (size_t k = 0; k < kids.size(); ++k) {
    const Eigen::VectorXd mu = problem.child_marginal(k, tau);
    value += -mu.dot(kids[k].theta) - kids[k].kappa * entropy_of(mu);
  }
  return value;
}

Eigen::VectorXd star_free_energy_minimizer(const std::vector<int>& sizes,
                                           const std::vector<int>& parent,
                                           const Eigen::VectorXd& theta_parent,
                                           double kappa_parent,
                                           const std::vector<StarChild>& kids,
                                           int max_iters, double tol) {
  const StarProblem problem(sizes, parent, kids);
  const Eigen::Index n = theta_parent.size();

  auto value = [&](const Eigen::VectorXd& tau) {
    double v = -tau.dot(theta_parent) - kappa_parent * entropy_of(tau);
    for (size_t k = 0; k < kids.size(); ++k) {
      const Eigen::VectorXd mu = problem.child_marginal(k, tau);
      v += -mu.dot(kids[k].theta) - kids[k].kappa * entropy_of(mu);
    }
    return v;
  };
  auto gradient = [&](const Eigen::VectorXd& tau) {
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      g[i] = -theta_parent[i] +
             kappa_parent * (1.0 + std::log(std::max(tau[i], 1e-300)));
    }
    for (size_t k = 0; k < kids.size(); ++k) {
      const Eigen::VectorXd mu = problem.child_marginal(k, tau);
      Eigen::VectorXd g_sub(mu.size());
      for (Eigen::Index j = 0; j < mu.size(); ++j) {
        g_sub[j] = -kids[k].theta[j] +
                   kids[k].kappa * (1.0 + std::log(std::max(mu[j], 1e-300)));
      }
      for (std::int64_t i = 0; i < n; ++i) {
        g[i] += g_sub[problem.indexers[k].map(i)];
      }
    }
    return g;
  };

  Eigen::VectorXd tau =
      Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  double current = value(tau);
  double step = 1.0;
  for (int iter = 0; iter < max_iters; ++iter) {
    const Eigen::VectorXd g = gradient(tau);
    Eigen::VectorXd next;
    double next_value = 0.0;
    for (;;) {
      next = project_to_simplex(tau - step * g);
      next_value = value(next);
      const Eigen::VectorXd diff = next - tau;
      const double model =
          current + g.dot(diff) + diff.squaredNorm() / (2.0 * step);
      if (next_value <= model + 1e-15 || step < 1e-18) break;
      step *= 0.5;
    }
    const double move = (next - tau).lpNorm<Eigen::Infinity>();
    tau = std::move(next);
    current = next_value;
    if (move < tol && iter > 20) break;
    step = std::min(step * 2.0, 1.0);
  }
  return tau;
}

}  // namespace privmarg::testing
