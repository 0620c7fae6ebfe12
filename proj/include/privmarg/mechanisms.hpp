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

#include <optional>
#include <string>
#include <vector>

#include "privmarg/out_of_model.hpp"
#include "privmarg/rng.hpp"

namespace privmarg {

// Privacy parameters under the replace-one neighbour convention. The
// noiseless flag is an explicit no-noise sentinel for epsilon = infinity
// runs; it never enters accounting as a numeric infinity.
struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;
  std::int64_t record_count = 0;
  bool noiseless = false;

  static PrivacyBudget pure(double epsilon, std::int64_t record_count);
  static PrivacyBudget no_noise(std::int64_t record_count);
};

struct Workload {
  std::vector<Clique> cliques;
};

// One privacy-consuming event. epsilon is absent for noiseless sentinel runs
// and for mechanisms whose accounting is left to the caller.
struct ProvenanceEvent {
  std::string mechanism;
  Clique clique;
  std::optional<double> epsilon;
  double scale = 0.0;
  std::uint64_t seed = 0;
};

using ProvenanceLog = std::vector<ProvenanceEvent>;

// Laplace mechanism on normalised marginals: epsilon splits equally across
// the cliques; per-cell scale b = 2k/(m epsilon) from the replace-one L1
// sensitivity 2/m and sequential composition. Recorded noise_scale is the
// standard deviation b sqrt(2). Noiseless budgets return exact marginals
// with noise_scale 1.
std::vector<Measurement> laplace_measure(const Dataset& data,
                                         const std::vector<Clique>& cliques,
                                         const PrivacyBudget& budget,
                                         SeededRng& rng,
                                         ProvenanceLog* provenance = nullptr);

// Gaussian noise with caller-supplied sigma; accounting is the caller's.
// sigma = 0 returns exact marginals with noise_scale 1.
std::vector<Measurement> gaussian_measure(const Dataset& data,
                                          const std::vector<Clique>& cliques,
                                          double sigma, SeededRng& rng,
                                          ProvenanceLog* provenance = nullptr);

// Index drawn with probability proportional to
// exp(epsilon * score / (2 sensitivity)).
int exponential_mechanism_select(std::span<const double> scores,
                                 double epsilon, double sensitivity,
                                 SeededRng& rng);

enum class GraphKind { kSaturated, kFactorGraph };

struct MwemOptions {
  OracleKind oracle = OracleKind::kConvexGbp;
  GraphKind graph = GraphKind::kSaturated;
  // Sentinel: selection is exact argmax and measurements are exact.
  bool noiseless = false;
  ProxConfig prox;
  OomConfig oom;
};

struct MwemRound {
  int round = 0;
  Clique selected;
  double epsilon_spent = 0.0;     // 0 when noiseless
  double workload_error = 0.0;    // mean L1 over the whole workload
};

struct MwemResult {
  FittedModel model;
  std::vector<MwemRound> rounds;
};

// Iterative select-measure-refit: each round the exponential mechanism picks
// the unmeasured workload clique with the largest model error (score
// m * err_r, sensitivity 2, budget eps_per_round/2), the Laplace mechanism
// measures it (eps_per_round/2), and the model is re-estimated over all
// measurements so far on a rebuilt region graph.
MwemResult mwem(const Dataset& data, const Workload& workload, int rounds,
                double eps_per_round, const MwemOptions& options,
                SeededRng& rng, ProvenanceLog* provenance = nullptr);

struct SynthResult {
  Dataset data;
  CliqueVector true_theta;  // pairwise log-potentials, one per tree edge
};

// Samples m records from a random pairwise tree model: a uniform spanning
// tree over the attributes (random-walk construction), edge log-potentials
// drawn i.i.d. N(0, temperature^2), then exact forward sampling from
// attribute 0 using per-edge conditionals.
SynthResult synth_generate(int attr_count, const std::vector<int>& sizes,
                           std::int64_t records, double temperature,
                           SeededRng& rng);

// Attribute names used by generated domains: A..Z, AA, AB, ...
std::string spreadsheet_name(int index);

}  // namespace privmarg
