#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "oracles.hpp"

using json = nlohmann::json;

namespace {

struct Run {
  int rc;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "bigraph");
  std::ostringstream out, err;
  const int rc = bigraph::cli::dispatch(args, out, err);
  return {rc, out.str(), err.str()};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("bigraph_cli_" + name)).string();
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run({}).rc == bigraph::cli::kUsage);
  CHECK(run({"--help"}).rc == bigraph::cli::kOk);
  CHECK(run({"sample", "--help"}).rc == bigraph::cli::kOk);
  CHECK(run({"sample", "--n1", "3", "--n2", "3", "--p", "0.1", "--bogus"}).rc == bigraph::cli::kUsage);
  CHECK(run({"sample", "--n1", "3", "--n2", "3"}).rc == bigraph::cli::kUsage);  // no instance
  CHECK(run({"sample", "--n1", "3", "--n2", "3", "--p", "1.5", "--seed", "1"}).rc == bigraph::cli::kInvalid);
  CHECK(run({"sample", "--n1", "0", "--n2", "3", "--p", "0.1", "--seed", "1"}).rc == bigraph::cli::kInvalid);
  CHECK(run({"sample", "--n1", "3", "--n2", "3", "--p", "0.1", "--format", "xml"}).rc == bigraph::cli::kInvalid);
  CHECK(run({"sample", "--n1", "x", "--n2", "3", "--p", "0.1"}).rc != bigraph::cli::kOk);
  CHECK(run({"regime", "--regime", "weak_super", "--n1", "50", "--n2", "50", "--p", "0.001", "--reps", "1",
             "--seed", "1"})
            .rc == bigraph::cli::kInvalid);
  CHECK(run({"sample", "--config", temp_path("missing.ini"), "--n1", "3"}).rc == bigraph::cli::kUsage);
}

TEST_CASE("empty graph sample") {
  const Run r = run({"sample", "--n1", "100", "--n2", "100", "--p", "0", "--seed", "7"});
  REQUIRE(r.rc == 0);
  const json j = json::parse(r.out);
  CHECK(j["L1"] == 1);
  CHECK(j["components"] == 200);
  CHECK(j["edges"] == 0);
  CHECK(j["seed"] == 7);
}

TEST_CASE("missing seed is drawn and reported") {
  const Run r = run({"sample", "--n1", "5", "--n2", "5", "--p", "0.2"});
  REQUIRE(r.rc == 0);
  const auto pos = r.err.find("seed: ");
  REQUIRE(pos != std::string::npos);
  const std::uint64_t reported = std::stoull(r.err.substr(pos + 6));
  CHECK(json::parse(r.out)["seed"].get<std::uint64_t>() == reported);
}

TEST_CASE("sample output agrees with a BFS of the exported edge list") {
  const std::string edges = temp_path("edges.txt");
  const Run r = run({"sample", "--n1", "300", "--n2", "200", "--p11", "0.004", "--p12", "0.003", "--p22", "0.006",
                     "--seed", "11", "--edges", edges});
  REQUIRE(r.rc == 0);
  const json j = json::parse(r.out);
  std::vector<std::pair<std::int64_t, std::int64_t>> list;
  std::ifstream f(edges);
  std::int64_t u, v;
  while (f >> u >> v) list.emplace_back(u, v);
  std::remove(edges.c_str());
  auto sizes = oracles::bfs_component_sizes(500, list);
  std::sort(sizes.rbegin(), sizes.rend());
  CHECK(j["edges"].get<std::size_t>() == list.size());
  CHECK(j["components"].get<std::size_t>() == sizes.size());
  CHECK(j["L1"] == sizes[0]);
  CHECK(j["L2"] == sizes[1]);
}

TEST_CASE("same seed gives identical output") {
  const std::vector<std::string> a{"regime", "--regime", "weak_sub", "--n1", "400", "--n2", "300", "--rows", "0.8",
                                   "--reps", "4", "--seed", "5", "--workers", "1"};
  auto b = a;
  b.back() = "3";
  const Run ra = run(a), rb = run(b);
  REQUIRE(ra.rc == 0);
  CHECK(ra.out == rb.out);
}

TEST_CASE("solve output matches an independent survival root") {
  const Run r = run({"solve", "--n1", "1000", "--n2", "1000", "--p", "0.0012"});
  REQUIRE(r.rc == 0);
  const json j = json::parse(r.out);
  CHECK(j["schema_version"] == 1);
  const double ref = oracles::symmetric_survival(0.0012, 0.0012, 1000, 1000);
  CHECK(std::abs(j["rho"][0].get<double>() - ref) < 1e-9);
  CHECK(std::abs(j["rho"][1].get<double>() - ref) < 1e-9);
  CHECK(std::abs(j["lambda"].get<double>() - 2.4) < 1e-12);
  CHECK(j["classification"] == "supercritical");
  // Edge probability conditioned on the child line dying out.
  const double pi = 0.0012 * (1.0 - ref) / (1.0 - 0.0012 * ref);
  CHECK(std::abs(j["pi"][0][1].get<double>() - pi) < 1e-12);
}

TEST_CASE("oracle subcommand matches brute force on three vertices") {
  const Run r = run({"oracle", "--n1", "2", "--n2", "1", "--p", "0.5", "--stat", "L1"});
  REQUIRE(r.rc == 0);
  const json j = json::parse(r.out);
  // Eight equally likely edge sets on the pairs (0,1), (0,2), (1,2).
  const std::vector<std::pair<std::int64_t, std::int64_t>> pairs{{0, 1}, {0, 2}, {1, 2}};
  std::map<std::int64_t, double> law;
  for (int mask = 0; mask < 8; ++mask) {
    std::vector<std::pair<std::int64_t, std::int64_t>> e;
    for (int b = 0; b < 3; ++b)
      if (mask >> b & 1) e.push_back(pairs[b]);
    const auto s = oracles::bfs_component_sizes(3, e);
    law[*std::max_element(s.begin(), s.end())] += 0.125;
  }
  REQUIRE(j["support"].size() == law.size());
  for (const auto& item : j["support"]) {
    CHECK(std::abs(item["probability"].get<double>() - law.at(item["value"].get<std::int64_t>())) < 1e-15);
  }
}

TEST_CASE("config file with command-line override") {
  const std::string path = temp_path("run.ini");
  {
    std::ofstream f(path);
    f << "# sample settings\nn1 = 40\nn2 = 30\np = 0.03\nseed = 9\ntiming = false\n";
  }
  const Run from_file = run({"sample", "--config", path});
  REQUIRE(from_file.rc == 0);
  CHECK(json::parse(from_file.out)["seed"] == 9);
  CHECK(json::parse(from_file.out)["n"][0] == 40);

  const Run overridden = run({"sample", "--config", path, "--seed", "10", "--n1", "41"});
  REQUIRE(overridden.rc == 0);
  CHECK(json::parse(overridden.out)["seed"] == 10);
  CHECK(json::parse(overridden.out)["n"][0] == 41);

  const auto tokens = bigraph::cli::config_tokens(path);
  CHECK(tokens == std::vector<std::string>{"--n1", "40", "--n2", "30", "--p", "0.03", "--seed", "9"});
  std::remove(path.c_str());
}

TEST_CASE("json and csv outputs") {
  const std::string out = temp_path("rep.json");
  const std::string csv = temp_path("rep.csv");
  const Run r = run({"regime", "--regime", "const_sub", "--n1", "300", "--n2", "300", "--eps", "-0.3", "--reps", "3",
                     "--seed", "2", "--out", out, "--csv", csv});
  REQUIRE(r.rc == 0);
  CHECK(r.out.empty());
  std::ifstream jf(out);
  const json j = json::parse(jf);
  CHECK(j["schema_version"] == 1);
  CHECK(j["reps"] == 3);
  CHECK(j["label"] == "const_sub");
  std::ifstream cf(csv);
  std::string line;
  int lines = 0;
  std::getline(cf, line);
  CHECK(line == "rep,seed,L1,L2,L1_type1,L1_type2,sL_type1,sL_type2,components,direct_L1,merged");
  while (std::getline(cf, line)) ++lines;
  CHECK(lines == 3);
  std::remove(out.c_str());
  std::remove(csv.c_str());
}

TEST_CASE("verify runs selected criteria") {
  const Run r = run({"verify", "--quick", "--only", "1", "--only", "2"});
  CHECK(r.rc == 0);
  CHECK(r.out.find("criterion 1 PASS") != std::string::npos);
  CHECK(r.out.find("criterion 2 PASS") != std::string::npos);
  CHECK(r.out.find("criterion 3") == std::string::npos);
}
