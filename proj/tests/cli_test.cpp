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

// End-to-end runs of the command-line tool, driven through the shell. The
// binary path arrives in PRIVMARG_BIN.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <nlohmann/json.hpp>
#include <sstream>

#include "privmarg/io.hpp"
#include "privmarg/out_of_model.hpp"

namespace fs = std::filesystem;
using namespace privmarg;
using nlohmann::json;

namespace {

std::string bin() {
  const char* path = std::getenv("PRIVMARG_BIN");
  REQUIRE_MESSAGE(path != nullptr, "PRIVMARG_BIN must point at the binary");
  return path;
}

int run(const std::string& args) {
  const std::string cmd =
      bin() + std::string(" --log-level quiet ") + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("privmarg_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int counter() {
    static int n = 0;
    return n++;
  }
  std::string operator/(const std::string& name) const {
    return (path / name).string();
  }
};

std::string slurp(const std::string& path) { return read_file(path); }

}  // namespace

TEST_CASE("synth emits a loadable, reproducible dataset") {
  TempDir tmp;
  REQUIRE(run("--seed 7 --out " + tmp / "a" +
              " synth --attrs 6 --sizes 3 --records 500 --temperature 1.0") ==
          0);
  REQUIRE(run("--seed 7 --out " + tmp / "b" +
              " synth --attrs 6 --sizes 3 --records 500 --temperature 1.0") ==
          0);
  CHECK(slurp(tmp / "a/data.csv") == slurp(tmp / "b/data.csv"));
  CHECK(slurp(tmp / "a/domain.json") == slurp(tmp / "b/domain.json"));
  CHECK(slurp(tmp / "a/true_model.json") == slurp(tmp / "b/true_model.json"));

  // Round trip through the library loaders.
  DomainPtr dom = domain_from_json(parse_json_file(tmp / "a/domain.json"));
  CHECK(dom->attr_count() == 6);
  std::istringstream csv(slurp(tmp / "a/data.csv"));
  const Dataset data = dataset_from_csv(csv, dom);
  CHECK(data.record_count() == 500);

  // A different seed gives different data.
  REQUIRE(run("--seed 8 --out " + tmp / "c" +
              " synth --attrs 6 --sizes 3 --records 500 --temperature 1.0") ==
          0);
  CHECK(slurp(tmp / "a/data.csv") != slurp(tmp / "c/data.csv"));
}

TEST_CASE("measure with the no-noise sentinel reproduces true marginals") {
  TempDir tmp;
  REQUIRE(run("--seed 3 --out " + tmp / "d" +
              " synth --attrs 5 --sizes 3 --records 400 --temperature 0.8") ==
          0);
  REQUIRE(run("--seed 4 --out " + tmp / "m" + " measure --data " +
              tmp / "d/data.csv" + " --domain " + tmp / "d/domain.json" +
              " --cliques random:5:3 --noise laplace --epsilon inf") == 0);

  DomainPtr dom = domain_from_json(parse_json_file(tmp / "d/domain.json"));
  std::istringstream csv(slurp(tmp / "d/data.csv"));
  const Dataset data = dataset_from_csv(csv, dom);
  const auto ms =
      measurements_from_json(parse_json_file(tmp / "m/measurements.json"),
                             *dom);
  REQUIRE(ms.size() == 5);
  std::set<Clique> distinct;
  for (const auto& m : ms) {
    CHECK(m.clique.size() == 3);
    distinct.insert(m.clique);
    const Factor truth = dataset_project(data, m.clique);
    CHECK((m.answers.array() - truth.values()).abs().maxCoeff() == 0.0);
  }
  CHECK(distinct.size() == 5);
}

TEST_CASE("provenance epsilon sum equals the declared budget") {
  TempDir tmp;
  REQUIRE(run("--seed 3 --out " + tmp / "d" +
              " synth --attrs 4 --sizes 3 --records 300 --temperature 1.0") ==
          0);
  REQUIRE(run("--seed 5 --out " + tmp / "m" + " measure --data " +
              tmp / "d/data.csv" + " --domain " + tmp / "d/domain.json" +
              " --cliques random:4:2 --noise laplace --epsilon 0.8") == 0);
  std::istringstream lines(slurp(tmp / "m/provenance.jsonl"));
  std::string line;
  double total = 0.0;
  int events = 0;
  while (std::getline(lines, line)) {
    const json j = json::parse(line);
    total += j.at("epsilon").get<double>();
    ++events;
  }
  CHECK(events == 4);
  CHECK(total == doctest::Approx(0.8));
}

TEST_CASE("estimate is deterministic and all oracles run") {
  TempDir tmp;
  REQUIRE(run("--seed 11 --out " + tmp / "d" +
              " synth --attrs 5 --sizes 3 --records 600 --temperature 1.0") ==
          0);
  REQUIRE(run("--seed 12 --out " + tmp / "m" + " measure --data " +
              tmp / "d/data.csv" + " --domain " + tmp / "d/domain.json" +
              " --cliques random:4:2 --noise laplace --epsilon 1.0") == 0);

  for (const std::string oracle : {"exact", "region-graph", "factor-graph"}) {
    REQUIRE(run("--out " + tmp / ("e_" + oracle) + " estimate --measurements " +
                tmp / "m/measurements.json" + " --domain " +
                tmp / "d/domain.json" + " --oracle " + oracle +
                " --iters 400") == 0);
    const json model =
        parse_json_file(tmp / ("e_" + oracle + "/model.json"));
    const auto trace = model.at("loss_trace").get<std::vector<double>>();
    CHECK(trace.back() <= trace.front());
  }

  REQUIRE(run("--out " + tmp / "e2" + " estimate --measurements " +
              tmp / "m/measurements.json" + " --domain " +
              tmp / "d/domain.json" + " --oracle region-graph --iters 400") ==
          0);
  CHECK(slurp(tmp / "e_region-graph/model.json") ==
        slurp(tmp / "e2/model.json"));
}

TEST_CASE("infer and evaluate") {
  TempDir tmp;
  REQUIRE(run("--seed 21 --out " + tmp / "d" +
              " synth --attrs 4 --sizes 3 --records 800 --temperature 1.0") ==
          0);
  // Noiseless measurements of two overlapping pairs.
  std::ofstream(tmp / "cliques.json")
      << R"([["A","B"],["B","C"],["C","D"]])";
  REQUIRE(run("--seed 22 --out " + tmp / "m" + " measure --data " +
              tmp / "d/data.csv" + " --domain " + tmp / "d/domain.json" +
              " --cliques " + tmp / "cliques.json" +
              " --noise laplace --epsilon inf") == 0);
  REQUIRE(run("--out " + tmp / "e" + " estimate --measurements " +
              tmp / "m/measurements.json" + " --domain " +
              tmp / "d/domain.json" +
              " --oracle region-graph --iters 4000 --damping 0") == 0);

  // In-model inference equals the empirical marginal (noiseless fit).
  REQUIRE(run("--out " + tmp / "q" + " infer --model " + tmp / "e/model.json" +
              " --clique A,B") == 0);
  DomainPtr dom = domain_from_json(parse_json_file(tmp / "d/domain.json"));
  std::istringstream csv(slurp(tmp / "d/data.csv"));
  const Dataset data = dataset_from_csv(csv, dom);
  const Factor truth = dataset_project(data, Clique({0, 1}));
  std::istringstream table(slurp(tmp / "q/marginal.csv"));
  std::string line;
  std::getline(table, line);
  CHECK(line == "clique,cell,value");
  int row = 0;
  while (std::getline(table, line)) {
    const auto comma = line.rfind(',');
    const double value = std::stod(line.substr(comma + 1));
    CHECK(std::abs(value - truth.values()[row]) <= 1e-4);
    ++row;
  }
  CHECK(row == 9);

  REQUIRE(run("--seed 23 --out " + tmp / "v" + " evaluate --model " +
              tmp / "e/model.json" + " --truth " + tmp / "d/data.csv" +
              " --cliques " + tmp / "cliques.json") == 0);
  std::istringstream errors(slurp(tmp / "v/errors.csv"));
  std::getline(errors, line);
  CHECK(line == "clique,metric,value,trial_seed");
  int rows = 0;
  while (std::getline(errors, line)) {
    const auto a = line.rfind(',');
    const auto b = line.rfind(',', a - 1);
    CHECK(std::stod(line.substr(b + 1, a - b - 1)) <= 1e-4);
    CHECK(line.substr(a + 1) == "23");
    ++rows;
  }
  CHECK(rows == 3);
}

TEST_CASE("mwem pipeline emits monotone noiseless errors reproducibly") {
  TempDir tmp;
  REQUIRE(run("--seed 31 --out " + tmp / "d" +
              " synth --attrs 4 --sizes 3 --records 700 --temperature 1.0") ==
          0);
  const std::string mwem_args =
      " mwem --data " + (tmp / "d/data.csv") + " --domain " +
      tmp / "d/domain.json" +
      " --workload random:4:2 --rounds 4 --eps-per-round inf "
      "--oracle region-graph --iters 1500";
  REQUIRE(run("--seed 32 --out " + tmp / "w1" + mwem_args) == 0);
  REQUIRE(run("--seed 32 --out " + tmp / "w2" + mwem_args) == 0);
  CHECK(slurp(tmp / "w1/model.json") == slurp(tmp / "w2/model.json"));
  CHECK(slurp(tmp / "w1/rounds.csv") == slurp(tmp / "w2/rounds.csv"));

  std::istringstream rounds(slurp(tmp / "w1/rounds.csv"));
  std::string line;
  std::getline(rounds, line);
  CHECK(line == "round,clique,epsilon,workload_error");
  double previous = 1e300;
  int rows = 0;
  while (std::getline(rounds, line)) {
    const double err = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(err <= previous + 1e-9);
    previous = err;
    ++rows;
  }
  CHECK(rows == 4);
  CHECK(previous <= 1e-3);  // every workload clique measured exactly
}

TEST_CASE("usage and failure paths exit nonzero without partial outputs") {
  TempDir tmp;
  CHECK(run("synth --attrs 3") != 0);  // missing required flags

  REQUIRE(run("--seed 41 --out " + tmp / "d" +
              " synth --attrs 3 --sizes 3 --records 100 --temperature 0.5") ==
          0);
  // Unknown attribute name.
  CHECK(run("--seed 41 --out " + tmp / "m" + " measure --data " +
            tmp / "d/data.csv" + " --domain " + tmp / "d/domain.json" +
            " --cliques random:2:2 --noise laplace --epsilon 1.0") == 0);
  REQUIRE(run("--out " + tmp / "e" + " estimate --measurements " +
              tmp / "m/measurements.json" + " --domain " +
              tmp / "d/domain.json" + " --oracle region-graph --iters 50") ==
          0);
  CHECK(run("--out " + tmp / "q" + " infer --model " + tmp / "e/model.json" +
            " --clique A,Z") != 0);
  CHECK(!fs::exists(tmp.path / "q/marginal.csv"));

  // Exact oracle on an oversized domain fails cleanly and writes nothing.
  REQUIRE(run("--seed 42 --out " + tmp / "big" +
              " synth --attrs 30 --sizes 4 --records 50 --temperature 0.5") ==
          0);
  REQUIRE(run("--seed 43 --out " + tmp / "bigm" + " measure --data " +
              tmp / "big/data.csv" + " --domain " + tmp / "big/domain.json" +
              " --cliques random:3:3 --noise laplace --epsilon inf") == 0);
  CHECK(run("--out " + tmp / "bige" + " estimate --measurements " +
            tmp / "bigm/measurements.json" + " --domain " +
            tmp / "big/domain.json" + " --oracle exact --iters 10") != 0);
  CHECK(!fs::exists(tmp.path / "bige/model.json"));
}
