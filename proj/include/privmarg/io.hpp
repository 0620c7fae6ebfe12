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

#include <iosfwd>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "privmarg/mechanisms.hpp"

namespace privmarg {

// File formats:
//   domain        JSON {"attrs": [{"name": str, "size": int}, ...]}
//   dataset       CSV, header = attribute names in domain order, int cells
//   cliques       JSON [[name, ...], ...]
//   measurements  JSON [{"clique": [...], "query"?: [[...]], "y": [...],
//                        "noise_scale": real}, ...]
//   region graph  JSON {"vertices": [...], "edges": [[parent, child], ...],
//                       "kappa": {"A,B": real, ...}}
//   fitted model  JSON {"domain", "graph", "kappa", "theta", "tau",
//                       "loss_trace"}
//   provenance    JSON lines {"mechanism", "clique", "epsilon", "scale",
//                             "seed"}

nlohmann::json domain_to_json(const Domain& domain);
DomainPtr domain_from_json(const nlohmann::json& j);

void dataset_to_csv(const Dataset& data, std::ostream& out);
Dataset dataset_from_csv(std::istream& in, DomainPtr domain);

nlohmann::json cliques_to_json(const std::vector<Clique>& cliques,
                               const Domain& domain);
std::vector<Clique> cliques_from_json(const nlohmann::json& j,
                                      const Domain& domain);

nlohmann::json measurements_to_json(const std::vector<Measurement>& ms,
                                    const Domain& domain);
std::vector<Measurement> measurements_from_json(const nlohmann::json& j,
                                                const Domain& domain);

nlohmann::json graph_to_json(const RegionGraph& graph);
RegionGraph graph_from_json(const nlohmann::json& j, DomainPtr domain);

nlohmann::json model_to_json(const FittedModel& model);
FittedModel model_from_json(const nlohmann::json& j);

nlohmann::json clique_vector_to_json(const CliqueVector& v,
                                     const Domain& domain);
CliqueVector clique_vector_from_json(const nlohmann::json& j,
                                     DomainPtr domain);

std::string provenance_to_jsonl(const ProvenanceLog& log,
                                const Domain& domain);

// Whole-file helpers; read errors raise IoError.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
nlohmann::json parse_json_file(const std::string& path);

}  // namespace privmarg
