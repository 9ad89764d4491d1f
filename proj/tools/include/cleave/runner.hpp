#pragma once

#include "cleave/fracture.hpp"
#include "cleave/minimizer.hpp"
#include "cleave/potential.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cleave::runner {

/// Invalid configuration; what() names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PotentialConfig {
  std::string family = "synthetic";
  double alpha = 4.0;
  double alpha_prime = 0.0;
  double beta = 1.0;

  PotentialFamily build() const;
};

struct ChiConfig {
  bool enabled = false;
  std::optional<double> kappa;  // default 10 beta
  double r_chi = 10.0;
  double smoothing_width = 1.0;
  double det_width = 0.5;
};

struct CapConfig {
  enum class Mode { Auto, On, Off };
  Mode mode = Mode::Auto;
  double r0 = 1.5;
  double stiffness_factor = 1e3;
};

struct FractureSettings {
  double r_threshold = 0.0;  // 0: derived from the potential
  double eta_rel = 0.25;
  double mu_rel = 0.1;
  double band_constant = 5.0;
  double exclusion_c = 2.0;
};

struct MinimizerSettings {
  double tol = 1e-8;
  int max_iter = 20000;
  int history = 10;
  int n_random = 2;
  int n_offsets = 9;
  double noise = 0.05;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  double l = 2.0;
  std::vector<double> eps;
  std::vector<double> phi;
  std::optional<double> psi;
  PotentialConfig potential;
  /// Exactly one of the two load lists is non-empty.
  std::vector<double> a;
  std::vector<double> a_rel;
  ChiConfig chi;
  CapConfig cap;
  FractureSettings fracture;
  MinimizerSettings minimizer;
  std::string output_dir = "out";

  /// Throws ConfigError on unknown keys, missing seed or invalid values.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

struct GridPoint {
  std::size_t index = 0;
  double phi = 0.0;
  double eps = 0.0;
  double a = 0.0;
  double a_rel = 0.0;
};

/// phi outer, eps middle, load inner.
std::vector<GridPoint> expand_grid(const ExperimentConfig& cfg);

struct PointResult {
  GridPoint point;
  bool ok = true;
  std::string flag = "ok";
  std::string winner;
  MinimizeStatus status = MinimizeStatus::Converged;
  double rescaled_energy = 0.0;
  double cap_energy_rescaled = 0.0;
  double predicted_limit = 0.0;
  double predicted_refined = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  std::size_t failed_starts = 0;
  std::optional<FractureReport> fracture;
};

PointResult run_point(const ExperimentConfig& cfg, const GridPoint& gp, int jobs = 1);

const std::vector<std::string>& csv_columns();
std::string csv_header();
std::string csv_row(const PointResult& r);
/// %.17g.
std::string format_number(double v);

/// Runs the whole grid, writing results.csv and manifest.json into cfg.output_dir.
/// Rows are written in grid order. Returns the number of flagged rows.
std::size_t run_experiment(const ExperimentConfig& cfg, int jobs, std::ostream& log);

}  // namespace cleave::runner
