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

#include "privmarg/io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace privmarg {

namespace {

using nlohmann::json;

json clique_to_json(const Clique& clique, const Domain& domain) {
  json names = json::array();
  for (int attr : clique.ids()) names.push_back(domain.name(attr));
  return names;
}

Clique clique_from_json(const json& j, const Domain& domain) {
  if (!j.is_array()) throw IoError("clique: expected an array of names");
  std::vector<int> ids;
  for (const auto& name : j) {
    auto attr = domain.find(name.get<std::string>());
    if (!attr) {
      throw IoError("clique: unknown attribute '" + name.get<std::string>() +
                    "'");
    }
    ids.push_back(*attr);
  }
  Clique c(std::move(ids));
  if (c.size() != static_cast<int>(j.size())) {
    throw IoError("clique: duplicate attribute names");
  }
  return c;
}

std::string clique_key(const Clique& clique, const Domain& domain) {
  return to_string(clique, domain);
}

Clique clique_from_key(const std::string& key, const Domain& domain) {
  std::vector<int> ids;
  std::stringstream ss(key);
  std::string name;
  while (std::getline(ss, name, ',')) {
    auto attr = domain.find(name);
    if (!attr) throw IoError("clique key: unknown attribute '" + name + "'");
    ids.push_back(*attr);
  }
  return Clique(std::move(ids));
}

json array_to_json(const Eigen::ArrayXd& values) {
  json out = json::array();
  for (Eigen::Index i = 0; i < values.size(); ++i) out.push_back(values[i]);
  return out;
}

Eigen::ArrayXd array_from_json(const json& j) {
  if (!j.is_array()) throw IoError("expected a numeric array");
  Eigen::ArrayXd out(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return out;
}

}  // namespace

json domain_to_json(const Domain& domain) {
  json attrs = json::array();
  for (int i = 0; i < domain.attr_count(); ++i) {
    attrs.push_back({{"name", domain.name(i)}, {"size", domain.size(i)}});
  }
  return json{{"attrs", attrs}};
}

DomainPtr domain_from_json(const json& j) {
  if (!j.contains("attrs") || !j["attrs"].is_array()) {
    throw IoError("domain: missing 'attrs' array");
  }
  std::vector<std::string> names;
  std::vector<int> sizes;
  for (const auto& attr : j["attrs"]) {
    names.push_back(attr.at("name").get<std::string>());
    sizes.push_back(attr.at("size").get<int>());
  }
  try {
    return std::make_shared<const Domain>(std::move(names), std::move(sizes));
  } catch (const Error& e) {
    throw IoError(std::string("domain: ") + e.what());
  }
}

void dataset_to_csv(const Dataset& data, std::ostream& out) {
  const Domain& domain = data.domain();
  for (int i = 0; i < domain.attr_count(); ++i) {
    if (i) out << ',';
    out << domain.name(i);
  }
  out << '\n';
  const std::int64_t m = data.record_count();
  for (std::int64_t r = 0; r < m; ++r) {
    for (int i = 0; i < domain.attr_count(); ++i) {
      if (i) out << ',';
      out << data.value(r, i);
    }
    out << '\n';
  }
}

Dataset dataset_from_csv(std::istream& in, DomainPtr domain) {
  auto split = [](const std::string& line) {
    std::vector<std::string> parts;
    std::string item;
    std::stringstream ss(line);
    while (std::getline(ss, item, ',')) {
      if (!item.empty() && item.back() == '\r') item.pop_back();
      parts.push_back(item);
    }
    return parts;
  };
  std::string line;
  if (!std::getline(in, line)) throw IoError("dataset csv: empty file");
  const auto header = split(line);
  if (static_cast<int>(header.size()) != domain->attr_count()) {
    throw IoError("dataset csv: header width does not match domain");
  }
  for (int i = 0; i < domain->attr_count(); ++i) {
    if (header[static_cast<size_t>(i)] != domain->name(i)) {
      throw IoError("dataset csv: header must list domain attributes in order");
    }
  }
  std::vector<std::int32_t> cells;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto parts = split(line);
    if (static_cast<int>(parts.size()) != domain->attr_count()) {
      throw IoError("dataset csv: row width does not match domain");
    }
    for (const auto& part : parts) {
      try {
        size_t used = 0;
        const int value = std::stoi(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
        cells.push_back(value);
      } catch (const std::exception&) {
        throw IoError("dataset csv: non-integer cell '" + part + "'");
      }
    }
  }
  try {
    return Dataset(std::move(domain), std::move(cells));
  } catch (const Error& e) {
    throw IoError(std::string("dataset csv: ") + e.what());
  }
}

json cliques_to_json(const std::vector<Clique>& cliques,
                     const Domain& domain) {
  json out = json::array();
  for (const auto& c : cliques) out.push_back(clique_to_json(c, domain));
  return out;
}

std::vector<Clique> cliques_from_json(const json& j, const Domain& domain) {
  if (!j.is_array()) throw IoError("cliques: expected an array");
  std::vector<Clique> out;
  for (const auto& item : j) out.push_back(clique_from_json(item, domain));
  return out;
}

json measurements_to_json(const std::vector<Measurement>& ms,
                          const Domain& domain) {
  json out = json::array();
  for (const auto& meas : ms) {
    json item{{"clique", clique_to_json(meas.clique, domain)},
              {"y", array_to_json(meas.answers.array())},
              {"noise_scale", meas.noise_scale}};
    if (meas.query) {
      json rows = json::array();
      for (Eigen::Index r = 0; r < meas.query->rows(); ++r) {
        rows.push_back(array_to_json(meas.query->row(r).array()));
      }
      item["query"] = rows;
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<Measurement> measurements_from_json(const json& j,
                                                const Domain& domain) {
  if (!j.is_array()) throw IoError("measurements: expected an array");
  std::vector<Measurement> out;
  for (const auto& item : j) {
    Measurement meas;
    meas.clique = clique_from_json(item.at("clique"), domain);
    meas.answers = array_from_json(item.at("y")).matrix();
    meas.noise_scale = item.at("noise_scale").get<double>();
    if (item.contains("query") && !item["query"].is_null()) {
      const auto& rows = item["query"];
      if (!rows.is_array() || rows.empty()) {
        throw IoError("measurements: query must be a nonempty matrix");
      }
      Eigen::MatrixXd q(rows.size(), rows[0].size());
      for (size_t r = 0; r < rows.size(); ++r) {
        Eigen::ArrayXd row = array_from_json(rows[r]);
        if (row.size() != q.cols()) {
          throw IoError("measurements: ragged query matrix");
        }
        q.row(static_cast<Eigen::Index>(r)) = row.matrix();
      }
      meas.query = std::move(q);
    }
    out.push_back(std::move(meas));
  }
  return out;
}

json graph_to_json(const RegionGraph& graph) {
  const Domain& domain = graph.domain();
  json vertices = json::array();
  for (const auto& v : graph.vertices()) {
    vertices.push_back(clique_to_json(v, domain));
  }
  json edges = json::array();
  for (const auto& [parent, child] : graph.edges()) {
    edges.push_back(json::array(
        {clique_to_json(parent, domain), clique_to_json(child, domain)}));
  }
  json kappa = json::object();
  for (const auto& [v, k] : graph.kappa_map()) {
    kappa[clique_key(v, domain)] = k;
  }
  return json{{"vertices", vertices}, {"edges", edges}, {"kappa", kappa}};
}

RegionGraph graph_from_json(const json& j, DomainPtr domain) {
  std::vector<Clique> vertices;
  for (const auto& v : j.at("vertices")) {
    vertices.push_back(clique_from_json(v, *domain));
  }
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) {
      throw IoError("graph: each edge must be a [parent, child] pair");
    }
    edges.emplace_back(clique_from_json(e[0], *domain),
                       clique_from_json(e[1], *domain));
  }
  std::map<Clique, double> kappa;
  for (const auto& [key, value] : j.at("kappa").items()) {
    kappa[clique_from_key(key, *domain)] = value.get<double>();
  }
  try {
    return RegionGraph::from_parts(std::move(domain), std::move(vertices),
                                   std::move(edges), std::move(kappa));
  } catch (const Error& e) {
    throw IoError(std::string("graph: ") + e.what());
  }
}

json clique_vector_to_json(const CliqueVector& v, const Domain& domain) {
  json out = json::object();
  for (const auto& [clique, factor] : v) {
    out[clique_key(clique, domain)] = array_to_json(factor.values());
  }
  return out;
}

CliqueVector clique_vector_from_json(const json& j, DomainPtr domain) {
  CliqueVector out;
  for (const auto& [key, values] : j.items()) {
    Clique clique = clique_from_key(key, *domain);
    out.set(Factor(domain, std::move(clique), array_from_json(values)));
  }
  return out;
}

json model_to_json(const FittedModel& model) {
  const Domain& domain = model.graph.domain();
  json graph = graph_to_json(model.graph);
  json kappa = graph["kappa"];
  return json{{"domain", domain_to_json(domain)},
              {"graph", graph},
              {"kappa", kappa},
              {"theta", clique_vector_to_json(model.theta, domain)},
              {"tau", clique_vector_to_json(model.tau, domain)},
              {"loss_trace", model.loss_trace}};
}

FittedModel model_from_json(const json& j) {
  DomainPtr domain = domain_from_json(j.at("domain"));
  RegionGraph graph = graph_from_json(j.at("graph"), domain);
  FittedModel model{graph, clique_vector_from_json(j.at("tau"), domain),
                    clique_vector_from_json(j.at("theta"), domain),
                    MessageState{},
                    j.at("loss_trace").get<std::vector<double>>()};
  for (const auto& v : graph.vertices()) {
    if (!model.tau.contains(v)) {
      throw IoError("model: tau is missing a vertex factor");
    }
  }
  return model;
}

std::string provenance_to_jsonl(const ProvenanceLog& log,
                                const Domain& domain) {
  std::string out;
  for (const auto& event : log) {
    json j{{"mechanism", event.mechanism},
           {"clique", clique_to_json(event.clique, domain)},
           {"epsilon", event.epsilon ? json(*event.epsilon) : json(nullptr)},
           {"scale", event.scale},
           {"seed", event.seed}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IoError("invalid JSON in '" + path + "': " + e.what());
  }
}

}  // namespace privmarg
