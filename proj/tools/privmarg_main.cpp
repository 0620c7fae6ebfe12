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

// Command-line surface: synth, measure, estimate, infer, evaluate, mwem.
// Stages hand data to each other through files; every run with identical
// flags and seed produces byte-identical output files.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "privmarg/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace privmarg;

namespace {

int g_log_level = 1;  // 0 quiet, 1 info, 2 debug

void log_info(const std::string& msg) {
  if (g_log_level >= 1) std::fprintf(stderr, "privmarg: %s\n", msg.c_str());
}

// Buffers outputs so a failed command leaves no partial artifacts behind.
class OutputSet {
 public:
  explicit OutputSet(const std::string& dir) : dir_(dir) {}

  void stage(const std::string& name, std::string content) {
    staged_.emplace_back(name, std::move(content));
  }

  void commit() {
    fs::create_directories(dir_);
    std::vector<fs::path> written;
    try {
      for (const auto& [name, content] : staged_) {
        const fs::path path = fs::path(dir_) / name;
        write_file(path.string(), content);
        written.push_back(path);
        log_info("wrote " + path.string());
      }
    } catch (...) {
      for (const auto& path : written) {
        std::error_code ec;
        fs::remove(path, ec);
      }
      throw;
    }
  }

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> staged_;
};

std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

DomainPtr load_domain(const std::string& path) {
  return domain_from_json(parse_json_file(path));
}

Dataset load_dataset(const std::string& path, DomainPtr domain) {
  std::istringstream in(read_file(path));
  return dataset_from_csv(in, std::move(domain));
}

// A clique list flag is either a JSON file of attribute-name lists or the
// form random:<count>:<width>, drawn without replacement from the domain.
std::vector<Clique> resolve_cliques(const std::string& spec,
                                    const Domain& domain, SeededRng& rng) {
  if (spec.rfind("random:", 0) == 0) {
    int count = 0;
    int width = 0;
    if (std::sscanf(spec.c_str(), "random:%d:%d", &count, &width) != 2 ||
        count < 1 || width < 1) {
      throw InvalidArgumentError("cliques: expected random:<count>:<width>");
    }
    if (width > domain.attr_count()) {
      throw InvalidArgumentError("cliques: width exceeds attribute count");
    }
    // Distinct subsets available; stop impossible requests up front.
    double available = 1.0;
    for (int i = 0; i < width; ++i) {
      available *= static_cast<double>(domain.attr_count() - i) /
                   static_cast<double>(i + 1);
    }
    if (static_cast<double>(count) > available) {
      throw InvalidArgumentError(
          "cliques: fewer distinct cliques exist than requested");
    }
    std::set<Clique> chosen;
    while (static_cast<int>(chosen.size()) < count) {
      std::vector<int> pool(static_cast<size_t>(domain.attr_count()));
      for (size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<int>(i);
      std::vector<int> pick;
      for (int w = 0; w < width; ++w) {
        const auto at = rng.uniform_int(static_cast<std::int64_t>(pool.size()));
        pick.push_back(pool[static_cast<size_t>(at)]);
        pool.erase(pool.begin() + at);
      }
      chosen.insert(Clique(std::move(pick)));
    }
    return {chosen.begin(), chosen.end()};
  }
  return cliques_from_json(parse_json_file(spec), domain);
}

Clique parse_clique_names(const std::string& names, const Domain& domain) {
  std::vector<int> ids;
  std::stringstream ss(names);
  std::string name;
  while (std::getline(ss, name, ',')) {
    auto attr = domain.find(name);
    if (!attr) {
      throw InvalidArgumentError("unknown attribute '" + name + "'");
    }
    ids.push_back(*attr);
  }
  if (ids.empty()) throw InvalidArgumentError("empty clique");
  return Clique(std::move(ids));
}

struct OracleChoice {
  OracleKind oracle = OracleKind::kConvexGbp;
  GraphKind graph = GraphKind::kSaturated;
};

OracleChoice parse_oracle(const std::string& name) {
  if (name == "exact") return {OracleKind::kExact, GraphKind::kSaturated};
  if (name == "region-graph") {
    return {OracleKind::kConvexGbp, GraphKind::kSaturated};
  }
  if (name == "factor-graph") {
    return {OracleKind::kConvexGbp, GraphKind::kFactorGraph};
  }
  throw InvalidArgumentError(
      "oracle must be one of exact|region-graph|factor-graph");
}

// epsilon flag accepts a positive real or the no-noise sentinel "inf".
struct EpsilonFlag {
  bool noiseless = false;
  double value = 0.0;
};

EpsilonFlag parse_epsilon(const std::string& text) {
  if (text == "inf" || text == "INF" || text == "infinity") {
    return {true, 0.0};
  }
  EpsilonFlag out;
  try {
    size_t used = 0;
    out.value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw InvalidArgumentError("epsilon: expected a number or 'inf'");
  }
  if (!(out.value > 0.0)) {
    throw InvalidArgumentError("epsilon must be positive");
  }
  return out;
}

int run_synth(int attrs, int size, std::int64_t records, double temperature,
              std::uint64_t seed, const std::string& out_dir) {
  SeededRng rng(seed);
  SynthResult synth =
      synth_generate(attrs, std::vector<int>(static_cast<size_t>(attrs), size),
                     records, temperature, rng);
  const Domain& domain = synth.data.domain();

  OutputSet out(out_dir);
  out.stage("domain.json", domain_to_json(domain).dump(2) + "\n");
  std::ostringstream csv;
  dataset_to_csv(synth.data, csv);
  out.stage("data.csv", csv.str());
  json true_model{{"domain", domain_to_json(domain)},
                  {"theta", clique_vector_to_json(synth.true_theta, domain)}};
  out.stage("true_model.json", true_model.dump(2) + "\n");
  out.commit();
  return 0;
}

int run_measure(const std::string& data_path, const std::string& domain_path,
                const std::string& cliques_spec, const std::string& noise,
                const std::string& epsilon_text, double sigma,
                std::uint64_t seed, const std::string& out_dir) {
  DomainPtr domain = load_domain(domain_path);
  Dataset data = load_dataset(data_path, domain);
  SeededRng rng(seed);
  const auto cliques = resolve_cliques(cliques_spec, *domain, rng);

  ProvenanceLog provenance;
  std::vector<Measurement> measurements;
  if (noise == "laplace") {
    const EpsilonFlag eps = parse_epsilon(epsilon_text);
    const PrivacyBudget budget =
        eps.noiseless ? PrivacyBudget::no_noise(data.record_count())
                      : PrivacyBudget::pure(eps.value, data.record_count());
    measurements = laplace_measure(data, cliques, budget, rng, &provenance);
  } else if (noise == "gaussian") {
    measurements = gaussian_measure(data, cliques, sigma, rng, &provenance);
  } else {
    throw InvalidArgumentError("noise must be laplace|gaussian");
  }

  OutputSet out(out_dir);
  out.stage("measurements.json",
            measurements_to_json(measurements, *domain).dump(2) + "\n");
  out.stage("provenance.jsonl", provenance_to_jsonl(provenance, *domain));
  out.commit();
  return 0;
}

int run_estimate(const std::string& measurements_path,
                 const std::string& domain_path, const std::string& oracle_name,
                 int iters, double step, double damping, int inner_iters,
                 bool no_warm_start, std::int64_t table_limit,
                 const std::string& out_dir) {
  DomainPtr domain = load_domain(domain_path);
  auto measurements =
      measurements_from_json(parse_json_file(measurements_path), *domain);
  const OracleChoice choice = parse_oracle(oracle_name);

  std::vector<Clique> cliques;
  for (const auto& meas : measurements) cliques.push_back(meas.clique);
  RegionGraph graph = choice.graph == GraphKind::kSaturated
                          ? RegionGraph::saturated(domain, cliques)
                          : RegionGraph::factor_graph(domain, cliques);

  L2Loss loss(domain, std::move(measurements));
  ProxConfig config;
  config.outer_iters = iters;
  if (step > 0.0) config.step_size = step;
  config.inner_gbp_iters = inner_iters;
  config.warm_start = !no_warm_start;
  config.gbp.damping = damping;
  config.full_table_limit = table_limit;
  log_info("estimating over " + std::to_string(graph.vertices().size()) +
           " vertices, " + std::to_string(graph.edges().size()) + " edges");
  FittedModel model = prox_pgm(loss, graph, choice.oracle, config);
  log_info("final loss " + format_double(model.loss_trace.back()));

  OutputSet out(out_dir);
  out.stage("model.json", model_to_json(model).dump(2) + "\n");
  out.commit();
  return 0;
}

int run_infer(const std::string& model_path, const std::string& clique_names,
              const std::string& out_dir) {
  FittedModel model = model_from_json(parse_json_file(model_path));
  const Domain& domain = model.graph.domain();
  const Clique clique = parse_clique_names(clique_names, domain);
  Factor marginal = infer_marginal(model, clique);

  std::ostringstream csv;
  csv << "clique,cell,value\n";
  const auto& values = marginal.values();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const auto coords = unflatten_index(domain, clique, i);
    csv << '"' << to_string(clique, domain) << "\",";
    for (size_t k = 0; k < coords.size(); ++k) {
      if (k) csv << '-';
      csv << coords[k];
    }
    csv << ',' << format_double(values[i]) << '\n';
  }
  OutputSet out(out_dir);
  out.stage("marginal.csv", csv.str());
  out.commit();
  return 0;
}

int run_evaluate(const std::string& model_path, const std::string& truth_path,
                 const std::string& cliques_spec, std::uint64_t seed,
                 const std::string& out_dir) {
  FittedModel model = model_from_json(parse_json_file(model_path));
  Dataset truth = load_dataset(truth_path, model.graph.domain_ptr());
  SeededRng rng(seed);
  const auto cliques =
      resolve_cliques(cliques_spec, model.graph.domain(), rng);
  const auto errors = evaluate_marginals(model, truth, cliques);

  std::ostringstream csv;
  csv << "clique,metric,value,trial_seed\n";
  for (const auto& [clique, value] : errors) {
    csv << '"' << to_string(clique, model.graph.domain()) << "\",l1,"
        << format_double(value) << ',' << seed << '\n';
  }
  OutputSet out(out_dir);
  out.stage("errors.csv", csv.str());
  out.commit();
  return 0;
}

int run_mwem(const std::string& data_path, const std::string& domain_path,
             const std::string& workload_spec, int rounds,
             const std::string& eps_text, const std::string& oracle_name,
             int iters, double damping, std::uint64_t seed,
             const std::string& out_dir) {
  DomainPtr domain = load_domain(domain_path);
  Dataset data = load_dataset(data_path, domain);
  SeededRng rng(seed);
  Workload workload{resolve_cliques(workload_spec, *domain, rng)};
  const OracleChoice choice = parse_oracle(oracle_name);
  const EpsilonFlag eps = parse_epsilon(eps_text);

  MwemOptions options;
  options.oracle = choice.oracle;
  options.graph = choice.graph;
  options.noiseless = eps.noiseless;
  options.prox.outer_iters = iters;
  options.prox.gbp.damping = damping;

  ProvenanceLog provenance;
  MwemResult result = mwem(data, workload, rounds,
                           eps.noiseless ? 0.0 : eps.value, options, rng,
                           &provenance);

  std::ostringstream csv;
  csv << "round,clique,epsilon,workload_error\n";
  for (const auto& round : result.rounds) {
    csv << round.round << ",\"" << to_string(round.selected, *domain) << "\","
        << format_double(round.epsilon_spent) << ','
        << format_double(round.workload_error) << '\n';
  }
  OutputSet out(out_dir);
  out.stage("model.json", model_to_json(result.model).dump(2) + "\n");
  out.stage("rounds.csv", csv.str());
  out.stage("provenance.jsonl", provenance_to_jsonl(provenance, *domain));
  out.commit();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Consistent marginal estimation from noisy measurements, with "
      "region-graph message passing and private measurement mechanisms"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string log_level = "info";
  app.add_option("--seed", seed, "Seed for every random choice")
      ->capture_default_str();
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--log-level", log_level, "quiet|info|debug")
      ->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  int attrs = 8;
  int size = 4;
  std::int64_t records = 10000;
  double temperature = 1.0;
  synth->add_option("--attrs", attrs, "Number of attributes")->required();
  synth->add_option("--sizes", size, "Uniform attribute size")->required();
  synth->add_option("--records", records, "Number of records")->required();
  synth->add_option("--temperature", temperature,
                    "Std dev of the pairwise log-potentials")
      ->capture_default_str();

  // measure
  auto* measure =
      app.add_subcommand("measure", "Measure noisy marginals of a dataset");
  std::string data_path, domain_path, cliques_spec;
  std::string noise = "laplace";
  std::string epsilon_text = "1.0";
  double sigma = 0.0;
  measure->add_option("--data", data_path, "Dataset CSV")->required();
  measure->add_option("--domain", domain_path, "Domain JSON")->required();
  measure
      ->add_option("--cliques", cliques_spec,
                   "Clique file or random:<count>:<width>")
      ->required();
  measure->add_option("--noise", noise, "laplace|gaussian")
      ->capture_default_str();
  measure->add_option("--epsilon", epsilon_text, "Privacy budget or 'inf'")
      ->capture_default_str();
  measure->add_option("--sigma", sigma, "Gaussian noise std dev")
      ->capture_default_str();

  // estimate
  auto* estimate = app.add_subcommand(
      "estimate", "Fit pseudo-marginals to measurements");
  std::string measurements_path, oracle_name = "region-graph";
  int iters = 1000;
  double step = 0.0;
  double damping = 0.5;
  int inner_iters = 1;
  bool no_warm_start = false;
  std::int64_t table_limit = kDefaultFullTableLimit;
  estimate->add_option("--measurements", measurements_path,
                       "Measurements JSON")
      ->required();
  estimate->add_option("--domain", domain_path, "Domain JSON")->required();
  estimate
      ->add_option("--oracle", oracle_name,
                   "exact|region-graph|factor-graph")
      ->capture_default_str();
  estimate->add_option("--iters", iters, "Outer iterations")
      ->capture_default_str();
  estimate->add_option("--step", step,
                       "Constant step size (0 uses 2/Lipschitz)")
      ->capture_default_str();
  estimate->add_option("--damping", damping, "Message damping in [0,1)")
      ->capture_default_str();
  estimate->add_option("--inner-iters", inner_iters,
                       "Message-passing sweeps per outer iteration")
      ->capture_default_str();
  estimate->add_flag("--no-warm-start", no_warm_start,
                     "Reset messages every oracle call");
  estimate->add_option("--table-limit", table_limit,
                       "Full-table cell limit for the exact oracle")
      ->capture_default_str();

  // infer
  auto* infer = app.add_subcommand("infer", "Answer one marginal query");
  std::string model_path, clique_names;
  infer->add_option("--model", model_path, "Model JSON")->required();
  infer->add_option("--clique", clique_names, "Comma-joined attribute names")
      ->required();

  // evaluate
  auto* evaluate =
      app.add_subcommand("evaluate", "L1 errors against a truth dataset");
  std::string truth_path;
  evaluate->add_option("--model", model_path, "Model JSON")->required();
  evaluate->add_option("--truth", truth_path, "Truth dataset CSV")->required();
  evaluate
      ->add_option("--cliques", cliques_spec,
                   "Clique file or random:<count>:<width>")
      ->required();

  // mwem
  auto* mwem_cmd = app.add_subcommand(
      "mwem", "Iterative private measurement of a workload");
  std::string workload_spec, eps_per_round = "0.1";
  int rounds = 1;
  mwem_cmd->add_option("--data", data_path, "Dataset CSV")->required();
  mwem_cmd->add_option("--domain", domain_path, "Domain JSON")->required();
  mwem_cmd
      ->add_option("--workload", workload_spec,
                   "Clique file or random:<count>:<width>")
      ->required();
  mwem_cmd->add_option("--rounds", rounds, "Number of rounds")->required();
  mwem_cmd->add_option("--eps-per-round", eps_per_round,
                       "Budget per round or 'inf'")
      ->capture_default_str();
  mwem_cmd->add_option("--oracle", oracle_name,
                       "exact|region-graph|factor-graph")
      ->capture_default_str();
  mwem_cmd->add_option("--iters", iters, "Outer iterations per refit")
      ->capture_default_str();
  mwem_cmd->add_option("--damping", damping, "Message damping in [0,1)")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  g_log_level = log_level == "quiet" ? 0 : (log_level == "debug" ? 2 : 1);

  try {
    if (*synth) {
      return run_synth(attrs, size, records, temperature, seed, out_dir);
    }
    if (*measure) {
      return run_measure(data_path, domain_path, cliques_spec, noise,
                         epsilon_text, sigma, seed, out_dir);
    }
    if (*estimate) {
      return run_estimate(measurements_path, domain_path, oracle_name, iters,
                          step, damping, inner_iters, no_warm_start,
                          table_limit, out_dir);
    }
    if (*infer) return run_infer(model_path, clique_names, out_dir);
    if (*evaluate) {
      return run_evaluate(model_path, truth_path, cliques_spec, seed, out_dir);
    }
    if (*mwem_cmd) {
      return run_mwem(data_path, domain_path, workload_spec, rounds,
                      eps_per_round, oracle_name, iters, damping, seed,
                      out_dir);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "privmarg: error: %s\n", e.what());
    return 1;
  }
  return 1;
}
