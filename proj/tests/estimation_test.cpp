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

#include <doctest.h>

#include "privmarg/mechanisms.hpp"
#include "support/oracles.hpp"

using namespace privmarg;

namespace {

DomainPtr make_domain(std::vector<std::string> names, std::vector<int> sizes) {
  return std::make_shared<const Domain>(std::move(names), std::move(sizes));
}

Measurement identity_measurement(const Clique& clique,
                                 std::vector<double> answers, double sigma) {
  Measurement m;
  m.clique = clique;
  m.answers = Eigen::Map<Eigen::VectorXd>(answers.data(),
                                          static_cast<Eigen::Index>(
                                              answers.size()));
  m.noise_scale = sigma;
  return m;
}

CliqueVector single_factor(DomainPtr dom, const Clique& clique,
                           std::vector<double> values) {
  Eigen::ArrayXd v = Eigen::Map<Eigen::ArrayXd>(
      values.data(), static_cast<Eigen::Index>(values.size()));
  CliqueVector out;
  out.set(Factor(std::move(dom), clique, v));
  return out;
}

}  // namespace

TEST_CASE("l2 loss closed forms") {
  auto dom = make_domain({"A"}, {2});
  const Clique a({0});

  L2Loss zero_loss(dom, {identity_measurement(a, {0.5, 0.5}, 1.0)});
  const CliqueVector at_y = single_factor(dom, a, {0.5, 0.5});
  CHECK(zero_loss.value(at_y) == doctest::Approx(0.0));
  CHECK(zero_loss.gradient(at_y).at(a).values().abs().maxCoeff() == 0.0);

  L2Loss loss(dom, {identity_measurement(a, {0.3, 0.7}, 1.0)});
  const CliqueVector tau = single_factor(dom, a, {0.5, 0.5});
  CHECK(loss.value(tau) == doctest::Approx(0.08));
  CHECK(loss.gradient(tau).at(a).values()[0] == doctest::Approx(0.4));
  CHECK(loss.gradient(tau).at(a).values()[1] == doctest::Approx(-0.4));
}

TEST_CASE("l2 gradient matches central finite differences") {
  auto dom = make_domain({"A", "B"}, {2, 3});
  const Clique ab({0, 1});
  SeededRng rng(53);

  Eigen::MatrixXd query(2, 6);
  for (Eigen::Index r = 0; r < 2; ++r) {
    for (Eigen::Index c = 0; c < 6; ++c) {
      query(r, c) = 2.0 * rng.uniform01() - 1.0;
    }
  }
  Measurement meas;
  meas.clique = ab;
  meas.query = query;
  meas.answers = Eigen::Vector2d(0.4, -0.1);
  meas.noise_scale = 0.7;
  Measurement plain = identity_measurement(ab, {0.1, 0.2, 0.1, 0.2, 0.2, 0.2},
                                           0.5);
  L2Loss loss(dom, {meas, plain});

  Eigen::VectorXd point(6);
  for (Eigen::Index i = 0; i < 6; ++i) point[i] = rng.uniform01();
  point /= point.sum();

  auto value_at = [&](const Eigen::VectorXd& x) {
    CliqueVector tau;
    tau.set(Factor(dom, ab, x.array()));
    return loss.value(tau);
  };
  const Eigen::VectorXd fd =
      testing::finite_difference_gradient(value_at, point, 1e-5);
  CliqueVector tau;
  tau.set(Factor(dom, ab, point.array()));
  const Eigen::ArrayXd analytic = loss.gradient(tau).at(ab).values();
  for (Eigen::Index i = 0; i < 6; ++i) {
    CHECK(std::abs(analytic[i] - fd[i]) <= 1e-6);
  }
}

TEST_CASE("power iteration agrees with a dense eigensolver") {
  SeededRng rng(59);
  Eigen::MatrixXd b(5, 5);
  for (Eigen::Index i = 0; i < 25; ++i) {
    b(i / 5, i % 5) = 2.0 * rng.uniform01() - 1.0;
  }
  const Eigen::MatrixXd a = b.transpose() * b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  const double expected = solver.eigenvalues().maxCoeff();
  CHECK(power_iteration_lmax(a) ==
        doctest::Approx(expected).epsilon(1e-5));
}

TEST_CASE("default step size") {
  auto dom = make_domain({"A", "B"}, {2, 2});
  L2Loss one(dom, {identity_measurement(Clique({0}), {0.5, 0.5}, 1.0)});
  CHECK(one.lipschitz() == doctest::Approx(2.0));
  CHECK(default_step_size(one) == doctest::Approx(1.0));

  // Distinct cliques stay separable: the bound is the per-clique max.
  L2Loss two(dom, {identity_measurement(Clique({0}), {0.5, 0.5}, 1.0),
                   identity_measurement(Clique({1}), {0.5, 0.5}, 1.0)});
  CHECK(two.lipschitz() == doctest::Approx(2.0));
  CHECK(default_step_size(two) == doctest::Approx(1.0));

  // Two measurements of the same clique add up.
  L2Loss same(dom, {identity_measurement(Clique({0}), {0.5, 0.5}, 1.0),
                    identity_measurement(Clique({0}), {0.4, 0.6}, 1.0)});
  CHECK(same.lipschitz() == doctest::Approx(4.0));
}

TEST_CASE("noiseless identity measurements are recovered exactly") {
  auto dom = make_domain({"A", "B", "C"}, {2, 2, 2});
  SeededRng rng(61);
  std::vector<std::int32_t> cells;
  for (int i = 0; i < 300 * 3; ++i) {
    cells.push_back(static_cast<std::int32_t>(rng.uniform_int(2)));
  }
  const Dataset data(dom, cells);
  const std::vector<Clique> cliques = {Clique({0, 1}), Clique({1, 2})};

  std::vector<Measurement> ms;
  for (const auto& c : cliques) {
    Measurement m;
    m.clique = c;
    m.answers = dataset_project(data, c).values().matrix();
    m.noise_scale = 1.0;
    ms.push_back(std::move(m));
  }
  const RegionGraph g = RegionGraph::saturated(dom, cliques);
  L2Loss loss(dom, ms);
  ProxConfig cfg;
  cfg.outer_iters = 3000;
  cfg.gbp.damping = 0.0;
  const FittedModel model = prox_pgm(loss, g, OracleKind::kConvexGbp, cfg);

  for (const auto& c : cliques) {
    CHECK(linf_distance(model.tau.at(c), dataset_project(data, c)) <= 1e-4);
  }
  CHECK(model.loss_trace.back() <= 1e-7);
  CHECK(model.loss_trace.back() <= model.loss_trace.front());
}

TEST_CASE("chain fit equals the full-table least squares minimizer") {
  // Tree-structured cliques make the local polytope exact, so the fit must
  // match the brute-force minimizer over realizable marginals.
  auto dom = make_domain({"A", "B", "C", "D"}, {3, 3, 3, 3});
  const std::vector<Clique> chain = {Clique({0, 1}), Clique({1, 2}),
                                     Clique({2, 3})};
  SeededRng rng(67);
  SynthResult synth = synth_generate(4, {3, 3, 3, 3}, 3000, 1.0, rng);

  const double sigma = 0.05;
  auto ms = gaussian_measure(synth.data, chain, sigma, rng);

  const RegionGraph g = RegionGraph::saturated(dom, chain);
  L2Loss loss(dom, ms);
  ProxConfig cfg;
  cfg.outer_iters = 30000;
  cfg.inner_gbp_iters = 10;
  cfg.gbp.damping = 0.0;
  cfg.convergence_tol = 1e-12;
  const FittedModel model = prox_pgm(loss, g, OracleKind::kConvexGbp, cfg);

  std::vector<testing::RawMeasurement> raw;
  for (const auto& m : ms) {
    raw.push_back(testing::RawMeasurement{m.clique.ids(), std::nullopt,
                                          m.answers, m.noise_scale});
  }
  const Eigen::VectorXd p_star =
      testing::full_table_least_squares({3, 3, 3, 3}, raw);

  for (const auto& c : chain) {
    const Eigen::VectorXd expected =
        testing::brute_marginal(p_star, {3, 3, 3, 3}, c.ids());
    const Eigen::ArrayXd got = model.tau.at(c).values();
    for (Eigen::Index i = 0; i < expected.size(); ++i) {
      CHECK(std::abs(got[i] - expected[i]) <= 1e-4);
    }
  }
}

TEST_CASE("oracle swap on trees and exact-oracle monotone descent") {
  auto dom = make_domain({"A", "B", "C"}, {3, 3, 3});
  const std::vector<Clique> chain = {Clique({0, 1}), Clique({1, 2})};
  SeededRng rng(71);
  SynthResult synth = synth_generate(3, {3, 3, 3}, 2000, 1.0, rng);
  auto ms = gaussian_measure(synth.data, chain, 0.05, rng);

  const RegionGraph g = RegionGraph::saturated(dom, chain);
  L2Loss loss(dom, ms);

  ProxConfig cfg;
  cfg.outer_iters = 20000;
  cfg.inner_gbp_iters = 10;
  cfg.gbp.damping = 0.0;
  cfg.convergence_tol = 1e-12;
  const FittedModel with_gbp = prox_pgm(loss, g, OracleKind::kConvexGbp, cfg);
  const FittedModel with_exact = prox_pgm(loss, g, OracleKind::kExact, cfg);

  CHECK(with_gbp.tau.linf_diff(with_exact.tau) <= 1e-4);

  // Mirror descent with the default step and an exact inner solve descends.
  for (size_t i = 1; i < with_exact.loss_trace.size(); ++i) {
    CHECK(with_exact.loss_trace[i] <=
          with_exact.loss_trace[i - 1] + 1e-10);
  }
}

TEST_CASE("fully converged inner message passing descends monotonically") {
  auto dom = make_domain({"A", "B", "C"}, {2, 2, 2});
  const std::vector<Clique> cliques = {Clique({0, 1}), Clique({1, 2}),
                                       Clique({0, 2})};
  SeededRng rng(73);
  SynthResult synth = synth_generate(3, {2, 2, 2}, 1000, 1.0, rng);
  auto ms = gaussian_measure(synth.data, cliques, 0.1, rng);

  const RegionGraph g = RegionGraph::saturated(dom, cliques);
  L2Loss loss(dom, ms);
  ProxConfig cfg;
  cfg.outer_iters = 120;
  cfg.inner_gbp_iters = 500;
  cfg.warm_start = false;
  cfg.gbp.damping = 0.5;
  cfg.gbp.convergence_tol = 1e-12;
  const FittedModel model = prox_pgm(loss, g, OracleKind::kConvexGbp, cfg);
  for (size_t i = 1; i < model.loss_trace.size(); ++i) {
    CHECK(model.loss_trace[i] <= model.loss_trace[i - 1] + 1e-9);
  }
}

TEST_CASE("counting number invariance of the fit") {
  auto dom = make_domain({"A", "B", "C"}, {2, 2, 2});
  const std::vector<Clique> loop = {Clique({0, 1}), Clique({1, 2}),
                                    Clique({0, 2})};
  SeededRng rng(79);
  SynthResult synth = synth_generate(3, {2, 2, 2}, 2000, 1.0, rng);
  auto ms = gaussian_measure(synth.data, loop, 0.1, rng);

  const RegionGraph g1 = RegionGraph::saturated(dom, loop);
  const RegionGraph g3 = g1.with_uniform_kappa(3.0);
  L2Loss loss(dom, ms);
  ProxConfig cfg;
  cfg.outer_iters = 30000;
  cfg.inner_gbp_iters = 10;
  cfg.gbp.damping = 0.5;
  cfg.convergence_tol = 1e-12;
  const FittedModel fit1 = prox_pgm(loss, g1, OracleKind::kConvexGbp, cfg);
  const FittedModel fit3 = prox_pgm(loss, g3, OracleKind::kConvexGbp, cfg);

  CHECK(fit1.tau.linf_diff(fit3.tau) <= 1e-3);

  double theta_gap = 0.0;
  for (const auto& [clique, factor] : fit1.theta) {
    theta_gap = std::max(theta_gap,
                         linf_distance(factor, fit3.theta.at(clique)));
  }
  CHECK(theta_gap >= 1e-2);
}

TEST_CASE("first-order optimality certificate over sampled directions") {
  auto dom = make_domain({"A", "B", "C"}, {2, 2, 2});
  const std::vector<Clique> cliques = {Clique({0, 1}), Clique({1, 2})};
  SeededRng rng(83);
  SynthResult synth = synth_generate(3, {2, 2, 2}, 1500, 1.0, rng);
  auto ms = gaussian_measure(synth.data, cliques, 0.1, rng);

  const RegionGraph g = RegionGraph::saturated(dom, cliques);
  L2Loss loss(dom, ms);
  ProxConfig cfg;
  cfg.outer_iters = 30000;
  cfg.inner_gbp_iters = 10;
  cfg.gbp.damping = 0.0;
  cfg.convergence_tol = 1e-12;
  const FittedModel model = prox_pgm(loss, g, OracleKind::kConvexGbp, cfg);

  CliqueVector tau_meas;
  for (const auto& c : cliques) tau_meas.set(model.tau.at(c));
  const CliqueVector grad = loss.gradient(tau_meas);

  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::int32_t> cells;
    for (int i = 0; i < 60 * 3; ++i) {
      cells.push_back(static_cast<std::int32_t>(rng.uniform_int(2)));
    }
    const Dataset sample(dom, cells);
    double directional = 0.0;
    for (const auto& c : cliques) {
      const Factor direction = dataset_project(sample, c) - model.tau.at(c);
      directional += grad.at(c).dot(direction);
    }
    CHECK(directional >= -1e-4);
  }
}

TEST_CASE("estimation beats the raw noisy measurements on average") {
  auto dom = make_domain({"A", "B", "C", "D", "E"}, {3, 3, 3, 3, 3});
  const std::vector<Clique> cliques = {Clique({0, 1}), Clique({1, 2}),
                                       Clique({2, 3}), Clique({3, 4})};
  double model_error = 0.0;
  double noisy_error = 0.0;
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    SeededRng rng(500 + trial);
    SynthResult synth = synth_generate(5, {3, 3, 3, 3, 3}, 5000, 1.0, rng);
    const PrivacyBudget budget =
        PrivacyBudget::pure(1.0, synth.data.record_count());
    auto ms = laplace_measure(synth.data, cliques, budget, rng);

    const RegionGraph g = RegionGraph::saturated(dom, cliques);
    L2Loss loss(dom, ms);
    ProxConfig cfg;
    cfg.outer_iters = 4000;
    cfg.gbp.damping = 0.0;
    const FittedModel model = prox_pgm(loss, g, OracleKind::kConvexGbp, cfg);

    for (size_t k = 0; k < cliques.size(); ++k) {
      const Factor truth = dataset_project(synth.data, cliques[k]);
      model_error += l1_distance(model.tau.at(cliques[k]), truth);
      noisy_error +=
          (ms[k].answers.array() - truth.values()).abs().sum();
    }
  }
  CHECK(model_error < noisy_error);
}

TEST_CASE("error paths") {
  auto dom = make_domain({"A", "B", "C"}, {2, 2, 2});
  const RegionGraph g = RegionGraph::saturated(dom, {Clique({0, 1})});

  // Clique outside every vertex.
  L2Loss unsupported(dom,
                     {identity_measurement(Clique({1, 2}),
                                           {0.25, 0.25, 0.25, 0.25}, 1.0)});
  CHECK_THROWS_AS(
      prox_pgm(unsupported, g, OracleKind::kConvexGbp, ProxConfig{}),
      UnsupportedCliqueError);

  // Oversized step triggers the divergence guard: the answers sit near the
  // uniform start, so the loss begins small and a wild step makes the
  // beliefs slam into simplex corners far from it.
  L2Loss loss(dom, {identity_measurement(Clique({0, 1}),
                                         {0.26, 0.24, 0.25, 0.25}, 0.01)});
  ProxConfig cfg;
  cfg.outer_iters = 200;
  cfg.step_size = 1e7;
  CHECK_THROWS_AS(prox_pgm(loss, g, OracleKind::kConvexGbp, cfg),
                  StepSizeTooLargeError);

  CHECK_THROWS_AS(L2Loss(dom, {identity_measurement(Clique({0}), {0.5, 0.5},
                                                    0.0)}),
                  InvalidArgumentError);
}

TEST_CASE("sub-clique measurements are lifted through the containing vertex") {
  // The graph's only vertex strictly contains both measured cliques, so the
  // loss is evaluated through projections and the gradient through
  // broadcasts.
  auto dom = make_domain({"A", "B"}, {2, 3});
  const Clique ab({0, 1});
  const RegionGraph g =
      RegionGraph::from_parts(dom, {ab}, {}, {{ab, 1.0}});

  Measurement on_a = identity_measurement(Clique({0}), {0.3, 0.7}, 1.0);
  Measurement on_b = identity_measurement(Clique({1}), {0.2, 0.5, 0.3}, 1.0);
  L2Loss loss(dom, {on_a, on_b});

  ProxConfig cfg;
  cfg.outer_iters = 4000;
  cfg.gbp.damping = 0.0;
  const FittedModel model = prox_pgm(loss, g, OracleKind::kConvexGbp, cfg);

  const Factor mu_a = marginalize(model.tau.at(ab), Clique({0}));
  const Factor mu_b = marginalize(model.tau.at(ab), Clique({1}));
  CHECK(mu_a.values()[0] == doctest::Approx(0.3).epsilon(1e-4));
  CHECK(mu_a.values()[1] == doctest::Approx(0.7).epsilon(1e-4));
  CHECK(mu_b.values()[0] == doctest::Approx(0.2).epsilon(1e-4));
  CHECK(mu_b.values()[1] == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(mu_b.values()[2] == doctest::Approx(0.3).epsilon(1e-4));

  // Same targets through the exact oracle.
  ProxConfig exact_cfg = cfg;
  exact_cfg.outer_iters = 2000;
  const FittedModel exact_fit = prox_pgm(loss, g, OracleKind::kExact, exact_cfg);
  CHECK(model.tau.linf_diff(exact_fit.tau) <= 1e-4);
}

TEST_CASE("fitted tau matches beliefs of the stored message state") {
  auto dom = make_domain({"A", "B", "C"}, {2, 2, 2});
  const std::vector<Clique> cliques = {Clique({0, 1}), Clique({1, 2})};
  SeededRng rng(89);
  SynthResult synth = synth_generate(3, {2, 2, 2}, 500, 1.0, rng);
  auto ms = gaussian_measure(synth.data, cliques, 0.1, rng);

  const RegionGraph g = RegionGraph::saturated(dom, cliques);
  L2Loss loss(dom, ms);
  ProxConfig cfg;
  cfg.outer_iters = 50;
  const FittedModel model = prox_pgm(loss, g, OracleKind::kConvexGbp, cfg);

  GbpConfig replay;
  replay.max_iters = 0;
  GbpResult beliefs = convex_gbp(g, model.theta, replay, &model.messages);
  CHECK(model.tau.linf_diff(beliefs.tau) == 0.0);
}
