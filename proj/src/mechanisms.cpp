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

#include "privmarg/mechanisms.hpp"

#include <algorithm>
#include <cmath>

namespace privmarg {

PrivacyBudget PrivacyBudget::pure(double epsilon, std::int64_t record_count) {
  if (!(epsilon > 0.0)) {
    throw InvalidArgumentError("privacy budget: epsilon must be positive");
  }
  if (record_count < 1) {
    throw InvalidArgumentError("privacy budget: record count must be >= 1");
  }
  return PrivacyBudget{epsilon, 0.0, record_count, false};
}

PrivacyBudget PrivacyBudget::no_noise(std::int64_t record_count) {
  if (record_count < 1) {
    throw InvalidArgumentError("privacy budget: record count must be >= 1");
  }
  return PrivacyBudget{0.0, 0.0, record_count, true};
}

std::vector<Measurement> laplace_measure(const Dataset& data,
                                         const std::vector<Clique>& cliques,
                                         const PrivacyBudget& budget,
                                         SeededRng& rng,
                                         ProvenanceLog* provenance) {
  if (cliques.empty()) {
    throw InvalidArgumentError("laplace_measure: no cliques given");
  }
  if (budget.record_count != data.record_count()) {
    throw InvalidArgumentError(
        "laplace_measure: budget record count does not match the dataset");
  }
  const double k = static_cast<double>(cliques.size());
  const double m = static_cast<double>(budget.record_count);
  std::vector<Measurement> out;
  out.reserve(cliques.size());
  for (const auto& clique : cliques) {
    Factor mu = dataset_project(data, clique);
    Measurement meas;
    meas.clique = clique;
    if (budget.noiseless) {
      meas.answers = mu.values().matrix();
      meas.noise_scale = 1.0;
    } else {
      // Replace-one neighbours move 1/m of mass between two cells: L1
      // sensitivity 2/m per clique, epsilon/k per clique by composition.
      const double b = 2.0 * k / (m * budget.epsilon);
      Eigen::VectorXd y = mu.values().matrix();
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.laplace(b);
      meas.answers = std::move(y);
      meas.noise_scale = b * std::sqrt(2.0);
    }
    if (provenance) {
      provenance->push_back(ProvenanceEvent{
          "laplace", clique,
          budget.noiseless ? std::nullopt
                           : std::optional<double>(budget.epsilon / k),
          budget.noiseless ? 0.0 : meas.noise_scale, rng.seed()});
    }
    out.push_back(std::move(meas));
  }
  return out;
}

std::vector<Measurement> gaussian_measure(const Dataset& data,
                                          const std::vector<Clique>& cliques,
                                          double sigma, SeededRng& rng,
                                          ProvenanceLog* provenance) {
  if (cliques.empty()) {
    throw InvalidArgumentError("gaussian_measure: no cliques given");
  }
  if (data.record_count() < 1) {
    throw EmptyDatasetError("gaussian_measure: no records");
  }
  if (sigma < 0.0) {
    throw InvalidArgumentError("gaussian_measure: sigma must be >= 0");
  }
  std::vector<Measurement> out;
  out.reserve(cliques.size());
  for (const auto& clique : cliques) {
    Factor mu = dataset_project(data, clique);
    Measurement meas;
    meas.clique = clique;
    if (sigma == 0.0) {
      meas.answers = mu.values().matrix();
      meas.noise_scale = 1.0;
    } else {
      Eigen::VectorXd y = mu.values().matrix();
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.gaussian(sigma);
      meas.answers = std::move(y);
      meas.noise_scale = sigma;
    }
    if (provenance) {
      provenance->push_back(
          ProvenanceEvent{"gaussian", clique, std::nullopt, sigma, rng.seed()});
    }
    out.push_back(std::move(meas));
  }
  return out;
}

int exponential_mechanism_select(std::span<const double> scores,
                                 double epsilon, double sensitivity,
                                 SeededRng& rng) {
  if (scores.empty()) {
    throw InvalidArgumentError("exponential mechanism: no candidates");
  }
  if (!(epsilon > 0.0) || !(sensitivity > 0.0)) {
    throw InvalidArgumentError(
        "exponential mechanism: epsilon and sensitivity must be positive");
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> weights(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    weights[i] = std::exp(epsilon * (scores[i] - top) / (2.0 * sensitivity));
  }
  return rng.categorical(weights);
}

namespace {

RegionGraph build_graph(GraphKind kind, DomainPtr domain,
                        const std::vector<Clique>& cliques) {
  return kind == GraphKind::kSaturated
             ? RegionGraph::saturated(std::move(domain), cliques)
             : RegionGraph::factor_graph(std::move(domain), cliques);
}

double workload_error(const FittedModel& model, const Workload& workload,
                      const Dataset& data, const OomConfig& oom) {
  double total = 0.0;
  for (const auto& c : workload.cliques) {
    total += l1_distance(infer_marginal(model, c, oom), dataset_project(data, c));
  }
  return total / static_cast<double>(workload.cliques.size());
}

}  // namespace

MwemResult mwem(const Dataset& data, const Workload& workload, int rounds,
                double eps_per_round, const MwemOptions& options,
                SeededRng& rng, ProvenanceLog* provenance) {
  if (workload.cliques.empty()) {
    throw InvalidArgumentError("mwem: empty workload");
  }
  if (rounds < 1 || rounds > static_cast<int>(workload.cliques.size())) {
    throw InvalidArgumentError(
        "mwem: rounds must be in [1, workload size]");
  }
  if (!options.noiseless && !(eps_per_round > 0.0)) {
    throw InvalidArgumentError("mwem: eps_per_round must be positive");
  }
  const double m = static_cast<double>(data.record_count());
  if (m < 1) throw EmptyDatasetError("mwem: no records");

  // True marginals of the workload, reused for selection scores and the
  // per-round error report.
  std::vector<Factor> truth;
  truth.reserve(workload.cliques.size());
  for (const auto& c : workload.cliques) {
    truth.push_back(dataset_project(data, c));
  }

  std::vector<bool> measured(workload.cliques.size(), false);
  std::vector<Measurement> measurements;
  std::vector<Clique> measured_cliques;
  std::optional<FittedModel> model;
  std::vector<MwemRound> round_log;

  for (int round = 0; round < rounds; ++round) {
    // Model error per unmeasured workload clique; the initial model is the
    // uniform distribution.
    std::vector<int> candidates;
    std::vector<double> errs;
    for (size_t i = 0; i < workload.cliques.size(); ++i) {
      if (measured[i]) continue;
      const Clique& c = workload.cliques[i];
      Factor estimate = model ? infer_marginal(*model, c, options.oom)
                              : Factor::uniform(data.domain_ptr(), c);
      candidates.push_back(static_cast<int>(i));
      errs.push_back(l1_distance(estimate, truth[i]));
    }

    int chosen;
    const double eps_select = eps_per_round / 2.0;
    if (options.noiseless) {
      chosen = candidates[static_cast<size_t>(
          std::max_element(errs.begin(), errs.end()) - errs.begin())];
    } else {
      // Score m * err_r with sensitivity 2: one replaced record moves a
      // normalised L1 error by at most 2/m.
      constexpr double kSensitivity = 2.0;
      std::vector<double> scores(errs.size());
      for (size_t i = 0; i < errs.size(); ++i) scores[i] = m * errs[i];
      chosen = candidates[static_cast<size_t>(
          exponential_mechanism_select(scores, eps_select, kSensitivity, rng))];
    }
    const Clique& selected = workload.cliques[static_cast<size_t>(chosen)];
    if (provenance) {
      provenance->push_back(ProvenanceEvent{
          "exponential", selected,
          options.noiseless ? std::nullopt : std::optional<double>(eps_select),
          0.0, rng.seed()});
    }

    const double eps_measure = eps_per_round / 2.0;
    const PrivacyBudget budget =
        options.noiseless ? PrivacyBudget::no_noise(data.record_count())
                          : PrivacyBudget::pure(eps_measure, data.record_count());
    auto meas = laplace_measure(data, {selected}, budget, rng, provenance);
    measurements.push_back(std::move(meas.front()));
    measured[static_cast<size_t>(chosen)] = true;
    measured_cliques.push_back(selected);

    RegionGraph graph =
        build_graph(options.graph, data.domain_ptr(), measured_cliques);
    L2Loss loss(data.domain_ptr(), measurements);
    model = prox_pgm(loss, graph, options.oracle, options.prox);

    MwemRound record;
    record.round = round + 1;
    record.selected = selected;
    record.epsilon_spent = options.noiseless ? 0.0 : eps_per_round;
    record.workload_error = workload_error(*model, workload, data, options.oom);
    round_log.push_back(std::move(record));
  }

  return MwemResult{std::move(*model), std::move(round_log)};
}

std::string spreadsheet_name(int index) {
  std::string name;
  int i = index;
  do {
    name.insert(name.begin(), static_cast<char>('A' + i % 26));
    i = i / 26 - 1;
  } while (i >= 0);
  return name;
}

SynthResult synth_generate(int attr_count, const std::vector<int>& sizes,
                           std::int64_t records, double temperature,
                           SeededRng& rng) {
  if (attr_count < 1) {
    throw InvalidArgumentError("synth: need at least one attribute");
  }
  if (static_cast<int>(sizes.size()) != attr_count) {
    throw InvalidArgumentError("synth: sizes must list one entry per attribute");
  }
  if (records < 0) throw InvalidArgumentError("synth: negative record count");
  if (temperature < 0.0) {
    throw InvalidArgumentError("synth: negative temperature");
  }

  std::vector<std::string> names(static_cast<size_t>(attr_count));
  for (int i = 0; i < attr_count; ++i) {
    names[static_cast<size_t>(i)] = spreadsheet_name(i);
  }
  auto domain = std::make_shared<const Domain>(std::move(names), sizes);

  // Uniform spanning tree by random walk over the complete graph: each first
  // entry to a node contributes the edge it arrived through.
  std::vector<std::pair<int, int>> tree_edges;
  if (attr_count > 1) {
    std::vector<bool> visited(static_cast<size_t>(attr_count), false);
    int current = static_cast<int>(rng.uniform_int(attr_count));
    visited[static_cast<size_t>(current)] = true;
    int seen = 1;
    while (seen < attr_count) {
      int next = static_cast<int>(rng.uniform_int(attr_count - 1));
      if (next >= current) ++next;
      if (!visited[static_cast<size_t>(next)]) {
        visited[static_cast<size_t>(next)] = true;
        tree_edges.emplace_back(current, next);
        ++seen;
      }
      current = next;
    }
  }

  // Edge potentials drawn in sorted clique order.
  std::vector<Clique> edge_cliques;
  edge_cliques.reserve(tree_edges.size());
  for (const auto& [a, b] : tree_edges) {
    edge_cliques.push_back(Clique(std::vector<int>{a, b}));
  }
  std::sort(edge_cliques.begin(), edge_cliques.end());
  CliqueVector theta;
  for (const auto& c : edge_cliques) {
    Factor f = Factor::zeros(domain, c);
    auto& v = f.mutable_values();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v[i] = temperature > 0.0 ? rng.gaussian(temperature) : 0.0;
    }
    theta.set(std::move(f));
  }

  // Rooted tree structure for forward sampling (root = attribute 0).
  std::vector<std::vector<int>> adjacency(static_cast<size_t>(attr_count));
  for (const auto& c : edge_cliques) {
    adjacency[static_cast<size_t>(c.ids()[0])].push_back(c.ids()[1]);
    adjacency[static_cast<size_t>(c.ids()[1])].push_back(c.ids()[0]);
  }
  for (auto& list : adjacency) std::sort(list.begin(), list.end());
  std::vector<int> parent(static_cast<size_t>(attr_count), -1);
  std::vector<int> order;  // BFS pre-order from the root
  order.reserve(static_cast<size_t>(attr_count));
  {
    std::vector<int> queue{0};
    std::vector<bool> seen(static_cast<size_t>(attr_count), false);
    seen[0] = true;
    for (size_t head = 0; head < queue.size(); ++head) {
      const int node = queue[head];
      order.push_back(node);
      for (int next : adjacency[static_cast<size_t>(node)]) {
        if (!seen[static_cast<size_t>(next)]) {
          seen[static_cast<size_t>(next)] = true;
          parent[static_cast<size_t>(next)] = node;
          queue.push_back(next);
        }
      }
    }
  }

  // exp(theta) of the edge between each node and its parent, as a
  // (parent value, node value) matrix.
  std::vector<Eigen::MatrixXd> edge_table(static_cast<size_t>(attr_count));
  for (int node : order) {
    const int par = parent[static_cast<size_t>(node)];
    if (par < 0) continue;
    const Clique c(std::vector<int>{par, node});
    const Eigen::ArrayXd t = theta.at(c).values().exp();
    const int n_first = domain->size(c.ids()[0]);
    const int n_second = domain->size(c.ids()[1]);
    Eigen::MatrixXd table(domain->size(par), domain->size(node));
    for (int a = 0; a < n_first; ++a) {
      for (int b = 0; b < n_second; ++b) {
        const double value = t[a * n_second + b];
        if (c.ids()[0] == par) {
          table(a, b) = value;
        } else {
          table(b, a) = value;
        }
      }
    }
    edge_table[static_cast<size_t>(node)] = std::move(table);
  }

  // Upward messages (leaves first): msg[node](x_parent) sums the subtree.
  std::vector<Eigen::VectorXd> msg(static_cast<size_t>(attr_count));
  std::vector<Eigen::VectorXd> subtree(static_cast<size_t>(attr_count));
  for (size_t idx = order.size(); idx-- > 0;) {
    const int node = order[idx];
    Eigen::VectorXd weight =
        Eigen::VectorXd::Ones(domain->size(node));
    for (int child : adjacency[static_cast<size_t>(node)]) {
      if (parent[static_cast<size_t>(child)] == node) {
        weight = weight.cwiseProduct(msg[static_cast<size_t>(child)]);
      }
    }
    subtree[static_cast<size_t>(node)] = weight;
    if (parent[static_cast<size_t>(node)] >= 0) {
      Eigen::VectorXd up = edge_table[static_cast<size_t>(node)] * weight;
      msg[static_cast<size_t>(node)] = up / up.sum();
    }
  }

  std::vector<std::int32_t> cells(
      static_cast<size_t>(records) * static_cast<size_t>(attr_count));
  std::vector<double> probs;
  for (std::int64_t rec = 0; rec < records; ++rec) {
    auto* row = &cells[static_cast<size_t>(rec) *
                       static_cast<size_t>(attr_count)];
    for (int node : order) {
      const int par = parent[static_cast<size_t>(node)];
      Eigen::VectorXd weight = subtree[static_cast<size_t>(node)];
      if (par >= 0) {
        weight = weight.cwiseProduct(
            edge_table[static_cast<size_t>(node)].row(row[par]).transpose());
      }
      probs.assign(weight.data(), weight.data() + weight.size());
      row[node] = static_cast<std::int32_t>(rng.categorical(probs));
    }
  }

  return SynthResult{Dataset(domain, std::move(cells)), std::move(theta)};
}

}  // namespace privmarg
