#pragma once

#include "cleave/energy.hpp"
#include "cleave/lattice.hpp"
#include "cleave/potential.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cleave {

/// One-sided quadratic cap 1/2 k (|dy|/eps - r0)_+^2 on bonds with both ends in
/// the lateral zone; k = stiffness_factor * alpha.
struct LateralCap {
  double r0 = 1.5;
  double stiffness_factor = 1e3;
};

/// Admissible class: frozen atoms have y1 = (1 + a_eps) x1, y2 free.
struct Constraints {
  double a_eps = 0.0;
  std::optional<LateralCap> lateral_cap;

  /// a_eps = sqrt(eps) a; cap on by default only when phi == 0.
  static Constraints for_load(const Lattice& lat, double a);
};

/// Start of a minimization. Serrated cuts are zig-zags with slopes +-1/sqrt(3).
struct CrackSpec {
  enum class Kind { Line, Serrated };
  Kind kind = Kind::Line;
  Direction dir = Direction::V2;
  int sign = 1;  // Serrated: initial slope sign
  double p = 0.0;  // x1 where the cut meets x2 = 0
  int n_teeth = 4;

  /// x1 coordinate of the cut at height x2.
  double cut(const Lattice& lat, double x2) const;
  std::string label() const;
};

enum class StartKind { Elastic, Crack, Perturbed };

struct StartLabel {
  StartKind kind = StartKind::Elastic;
  std::optional<CrackSpec> crack;
  int perturbation = -1;
  std::string to_string() const;
};

enum class MinimizeStatus { Converged, MaxIterations, LineSearchFailure, Error };

const char* to_string(MinimizeStatus s);

struct MinimizeOptions {
  double tol = 1e-8;  // on max |dE/dy| in units of beta / eps
  int max_iter = 20000;
  int history = 10;
  std::optional<ChiPenalty> chi;
  bool record_trace = true;

  // Portfolio settings.
  int n_random = 2;
  std::uint64_t seed = 0;
  int n_offsets = 9;
  double noise = 0.05;  // perturbation amplitude in units of eps
  int jobs = 1;
  /// Objectives within this relative distance of the best count as ties;
  /// ties go to the lowest start index.
  double tie_tolerance = 1e-10;
};

struct MinimizeResult {
  Deformation y;
  EnergyReport report;
  /// Raw energy plus lateral cap energy: the minimized quantity.
  double objective = 0.0;
  double cap_energy = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  MinimizeStatus status = MinimizeStatus::Converged;
  StartLabel label;
  std::vector<double> trace;
  std::string message;
};

struct StartOutcome {
  StartLabel label;
  MinimizeStatus status = MinimizeStatus::Converged;
  double objective = 0.0;
  double rescaled_energy = 0.0;
  int iterations = 0;
  std::string message;
};

struct MultistartResult {
  MinimizeResult best;
  std::vector<StartOutcome> starts;
  std::size_t best_index = 0;
};

/// y = (Id + diag(a_eps, -a_eps / 3)) x.
Deformation elastic_guess(const Lattice& lat, double a_eps);

/// Admissible offsets [lo, hi] for p, or nullopt if the cut cannot stay inside.
std::optional<std::pair<double, double>> crack_offset_range(const Lattice& lat, const CrackSpec& spec,
                                                          bool lateral_cap);

/// Identity left of the cut, x + a_eps l e1 right of it; frozen atoms keep
/// y = ((1 + a_eps) x1, x2). Throws std::invalid_argument if the cut leaves
/// the admissible range.
Deformation crack_guess(const Lattice& lat, double a_eps, const CrackSpec& spec,
                        bool lateral_cap = false);

/// Lateral cap energy of y (0 if the cap is off).
double lateral_cap_energy(const Lattice& lat, const PotentialFamily& fam, const Constraints& cons,
                          std::span<const Vec2> y);

/// L-BFGS with backtracking over the free coordinates; gradient descent
/// fallback. y0 is projected onto the constraints first.
MinimizeResult minimize(const Lattice& lat, const PotentialFamily& fam, const Constraints& cons,
                        const Deformation& y0, const MinimizeOptions& opts,
                        StartLabel label = {});

/// The start portfolio: elastic, every admissible crack and serrated cut
/// over n_offsets offsets, then n_random perturbed starts.
std::vector<std::pair<StartLabel, Deformation>> start_portfolio(const Lattice& lat,
                                                                const Constraints& cons,
                                                                const MinimizeOptions& opts);

/// Minimizes from every portfolio start (opts.jobs threads) and returns the
/// lowest objective, ties broken by start index.
MultistartResult multistart(const Lattice& lat, const PotentialFamily& fam, const Constraints& cons,
                            const MinimizeOptions& opts);

}  // namespace cleave
