#include "cleave/reduced.hpp"
#include "cleave/runner.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace cleave;
using namespace cleave::runner;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "lattice": {"l": 2, "eps": [0.125], "phi": [0.3]},
    "load": {"a": [0.0]},
    "minimizer": {"seed": 5, "n_random": 0, "n_offsets": 1}
  })");
}

std::string error_of(const json& j) {
  try {
    ExperimentConfig::from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("cleave_runner_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, ParsesMinimalConfigWithDefaults) {
  const ExperimentConfig c = ExperimentConfig::from_json(minimal());
  EXPECT_EQ(c.l, 2.0);
  EXPECT_EQ(c.eps, std::vector<double>{0.125});
  EXPECT_EQ(c.potential.family, "synthetic");
  EXPECT_EQ(c.potential.alpha, 4.0);
  EXPECT_EQ(c.minimizer.seed, 5u);
  EXPECT_EQ(c.minimizer.tol, 1e-8);
  EXPECT_FALSE(c.chi.enabled);
  EXPECT_EQ(c.cap.mode, CapConfig::Mode::Auto);
  // Round trip through to_json.
  const ExperimentConfig d = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(d.to_json(), c.to_json());
}

TEST(Config, LennardJonesFixesAlpha) {
  json j = minimal();
  j["potential"] = {{"family", "lennard_jones"}, {"beta", 2.0}};
  const ExperimentConfig c = ExperimentConfig::from_json(j);
  EXPECT_EQ(c.potential.alpha, 144.0);
  EXPECT_EQ(c.potential.alpha_prime, -3024.0);
  j["potential"]["alpha"] = 3.0;
  EXPECT_NE(error_of(j).find("potential.alpha"), std::string::npos);
}

TEST(Config, ErrorsNameTheField) {
  json j = minimal();
  j["lattice"]["spacing"] = 0.1;
  EXPECT_EQ(error_of(j).rfind("lattice.spacing", 0), 0u) << error_of(j);

  j = minimal();
  j["minimizer"].erase("seed");
  EXPECT_EQ(error_of(j).rfind("minimizer.seed", 0), 0u) << error_of(j);

  j = minimal();
  j.erase("minimizer");
  EXPECT_EQ(error_of(j).rfind("minimizer.seed", 0), 0u);

  j = minimal();
  j["lattice"].erase("eps");
  EXPECT_EQ(error_of(j).rfind("lattice.eps", 0), 0u);

  j = minimal();
  j["lattice"]["eps"] = {1.0};
  EXPECT_EQ(error_of(j).rfind("lattice.eps", 0), 0u) << error_of(j);

  j = minimal();
  j["load"]["a_rel"] = {1.0};
  EXPECT_EQ(error_of(j).rfind("load", 0), 0u);

  j = minimal();
  j["potential"] = {{"family", "morse"}};
  EXPECT_EQ(error_of(j).rfind("potential.family", 0), 0u);

  j = minimal();
  j["lattice"]["phi"] = {2.0};
  EXPECT_EQ(error_of(j).rfind("lattice.phi", 0), 0u) << error_of(j);

  j = minimal();
  j["lateral_cap"] = {{"mode", "sometimes"}};
  EXPECT_EQ(error_of(j).rfind("lateral_cap.mode", 0), 0u);

  j = minimal();
  j["fracture"] = {{"eta_rel", 1.5}};
  EXPECT_EQ(error_of(j).rfind("fracture.eta_rel", 0), 0u) << error_of(j);

  j = minimal();
  j["minimizer"]["tol"] = "small";
  EXPECT_EQ(error_of(j).rfind("minimizer.tol", 0), 0u) << error_of(j);
}

TEST(Config, LoadFromFile) {
  const auto dir = scratch_dir("load");
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "c.json") << minimal().dump();
    std::ofstream(dir / "broken.json") << "{ not json";
  }
  EXPECT_EQ(load_config(dir / "c.json").eps.size(), 1u);
  EXPECT_THROW(load_config(dir / "broken.json"), ConfigError);
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
}

TEST(Grid, OrderIsPhiThenEpsThenLoad) {
  json j = minimal();
  j["lattice"]["phi"] = {0.0, 0.2};
  j["lattice"]["eps"] = {0.125, 0.0625};
  j["load"] = {{"a_rel", {0.5, 1.0, 1.5}}};
  const auto grid = expand_grid(ExperimentConfig::from_json(j));
  ASSERT_EQ(grid.size(), 12u);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_EQ(grid[k].index, k);
    EXPECT_EQ(grid[k].phi, k < 6 ? 0.0 : 0.2);
    EXPECT_EQ(grid[k].eps, (k / 3) % 2 == 0 ? 0.125 : 0.0625);
    EXPECT_EQ(grid[k].a_rel, 0.5 * (1 + k % 3));
  }
  const double ac = cleavage_prediction(4.0, 0.0, 1.0, 2.0, 0.2).a_crit;
  EXPECT_NEAR(grid[7].a, ac, 1e-15);
}

TEST(Csv, NumberFormatAndColumns) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
  const auto& cols = csv_columns();
  EXPECT_EQ(cols.front(), "index");
  EXPECT_EQ(cols.back(), "flag");
  const std::string header = csv_header();
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), static_cast<long>(cols.size()) - 1);
}

TEST(Runner, ZeroLoadPointIsElastic) {
  const ExperimentConfig c = ExperimentConfig::from_json(minimal());
  const PointResult r = run_point(c, expand_grid(c).front());
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(r.flag, "ok");
  EXPECT_EQ(r.winner, "elastic");
  EXPECT_LT(r.rescaled_energy, 1e-24);
  EXPECT_EQ(r.iterations, 0);
  const std::string row = csv_row(r);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), static_cast<long>(csv_columns().size()) - 1);
  EXPECT_EQ(row.rfind("0,", 0), 0u);
}

TEST(Runner, ExperimentOutputIsReproducible) {
  json j = minimal();
  j["load"] = {{"a_rel", {0.5, 1.5}}};
  const auto dir1 = scratch_dir("rep1"), dir2 = scratch_dir("rep2");
  std::ostringstream log;
  j["output"] = {{"dir", dir1.string()}};
  EXPECT_EQ(run_experiment(ExperimentConfig::from_json(j), 1, log), 0u);
  j["output"] = {{"dir", dir2.string()}};
  EXPECT_EQ(run_experiment(ExperimentConfig::from_json(j), 2, log), 0u);
  const std::string a = slurp(dir1 / "results.csv");
  EXPECT_EQ(a, slurp(dir2 / "results.csv"));
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 3);
  EXPECT_EQ(a.substr(0, a.find('\n')), csv_header());
  const json m1 = json::parse(slurp(dir1 / "manifest.json"));
  const json m2 = json::parse(slurp(dir2 / "manifest.json"));
  EXPECT_EQ(m1["rows"], 2);
  EXPECT_EQ(m1["seed"], 5);
  json c1 = m1["config"], c2 = m2["config"];
  c1.erase("output");
  c2.erase("output");
  EXPECT_EQ(c1, c2);
  EXPECT_EQ(m1["columns"].size(), csv_columns().size());
}
