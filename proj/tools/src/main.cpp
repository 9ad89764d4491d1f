#include "cleave/reduced.hpp"
#include "cleave/runner.hpp"
#include "cleave/version.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>

using namespace cleave;
using nlohmann::json;

namespace {

constexpr int kConfigExit = 2;

PotentialFamily family_from_flags(const std::string& family, double alpha, double alpha_prime, double beta) {
  if (family == "synthetic") return PotentialFamily::synthetic(alpha, alpha_prime, beta);
  if (family == "lennard_jones") return PotentialFamily::lennard_jones(beta);
  throw runner::ConfigError("--family: expected synthetic or lennard_jones");
}

json prediction_json(const CleavagePrediction& p, const std::vector<double>& loads, double eps) {
  json j;
  j["alpha"] = p.alpha;
  j["alpha_prime"] = p.alpha_prime;
  j["beta"] = p.beta;
  j["l"] = p.l;
  j["phi"] = p.phi;
  j["gamma"] = p.gamma;
  std::vector<std::string> dirs;
  for (Direction d : p.v_gamma) dirs.emplace_back(to_string(d));
  j["v_gamma"] = dirs;
  j["p_gamma"] = p.p_gamma;
  j["a_crit"] = p.a_crit;
  j["crack_energy"] = p.crack_energy;
  j["cubic_coeff"] = p.cubic_coeff;
  json rows = json::array();
  for (double a : loads) {
    rows.push_back({{"a", a},
                    {"elastic_energy", p.elastic_energy(a)},
                    {"limit_energy", p.limit_energy(a)},
                    {"refined_energy", p.refined_energy(a, eps)}});
  }
  j["loads"] = rows;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Atomistic cleavage laboratory: minimize, predict, tabulate."};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run the experiment grid of a JSON config");
  std::string config_path;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> chi_flag;
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Override minimizer.seed");
  run->add_option("--out", out_dir, "Override output.dir");
  run->add_option("--chi", chi_flag, "Override chi.enabled")->check(CLI::IsMember({"on", "off"}));

  // predict
  auto* predict = app.add_subcommand("predict", "Closed-form cleavage predictions (no minimization)");
  std::string family = "synthetic";
  double alpha = 4.0, alpha_prime = 0.0, beta = 1.0, l = 2.0, eps_pred = 1.0 / 64.0;
  std::vector<double> phis = {0.0};
  std::vector<double> loads;
  predict->add_option("--family", family, "synthetic or lennard_jones")->check(CLI::IsMember({"synthetic", "lennard_jones"}));
  predict->add_option("--alpha", alpha, "W''(1) (synthetic)");
  predict->add_option("--alpha-prime", alpha_prime, "W'''(1) (synthetic)");
  predict->add_option("--beta", beta, "Dissociation energy");
  predict->add_option("--l", l, "Specimen length");
  predict->add_option("--phi", phis, "Lattice angle(s) in radians");
  predict->add_option("--a", loads, "Rescaled load(s) to evaluate the energies at");
  predict->add_option("--eps", eps_pred, "Lattice spacing for the refined energy");

  // reduced
  auto* reduced = app.add_subcommand("reduced", "Tabulate the reduced energy and its expansion");
  double phi_red = 0.0, r_min = 1.0, r_max = 1.2;
  int n_points = 21;
  reduced->add_option("--family", family, "synthetic or lennard_jones")->check(CLI::IsMember({"synthetic", "lennard_jones"}));
  reduced->add_option("--alpha", alpha, "W''(1) (synthetic)");
  reduced->add_option("--alpha-prime", alpha_prime, "W'''(1) (synthetic)");
  reduced->add_option("--beta", beta, "Dissociation energy");
  reduced->add_option("--phi", phi_red, "Lattice angle in radians");
  reduced->add_option("--r-min", r_min, "First stretch");
  reduced->add_option("--r-max", r_max, "Last stretch");
  reduced->add_option("--n", n_points, "Number of points")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (*run) {
      runner::ExperimentConfig cfg = runner::load_config(config_path);
      if (seed) cfg.minimizer.seed = *seed;
      if (out_dir) cfg.output_dir = *out_dir;
      if (chi_flag) cfg.chi.enabled = *chi_flag == "on";
      cfg.validate();
      const std::size_t flagged = runner::run_experiment(cfg, jobs, std::cerr);
      std::cerr << "wrote " << cfg.output_dir << "/results.csv";
      if (flagged) std::cerr << " (" << flagged << " flagged rows)";
      std::cerr << "\n";
      return 0;
    }
    if (*predict) {
      const PotentialFamily fam = family_from_flags(family, alpha, alpha_prime, beta);
      json out = json::array();
      for (double phi : phis) {
        LatticeSpec{l, eps_pred, phi}.validate();
        out.push_back(prediction_json(cleavage_prediction(fam.alpha(), fam.alpha_prime(), fam.beta(), l, phi),
                                      loads, eps_pred));
      }
      std::cout << out.dump(2) << "\n";
      return 0;
    }
    if (*reduced) {
      const PotentialFamily fam = family_from_flags(family, alpha, alpha_prime, beta);
      if (!(phi_red >= 0.0 && phi_red < kPi / 3.0)) throw runner::ConfigError("--phi: must lie in [0, pi/3)");
      std::cout << "r,w_reduced,expansion,F11,F12,F21,F22\n";
      for (int k = 0; k < n_points; ++k) {
        const double r = n_points == 1 ? r_min : r_min + (r_max - r_min) * k / (n_points - 1);
        const ReducedEnergyResult res = reduced_energy_solve(fam, phi_red, r);
        const double expansion =
            std::abs(r) >= 1.0 ? reduced_energy_expansion(fam.alpha(), fam.alpha_prime(), phi_red, std::abs(r)) : 0.0;
        std::cout << runner::format_number(r) << ',' << runner::format_number(res.value) << ','
                  << runner::format_number(expansion) << ',' << runner::format_number(res.minimizer(0, 0)) << ','
                  << runner::format_number(res.minimizer(0, 1)) << ',' << runner::format_number(res.minimizer(1, 0))
                  << ',' << runner::format_number(res.minimizer(1, 1)) << "\n";
      }
      return 0;
    }
  } catch (const runner::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
