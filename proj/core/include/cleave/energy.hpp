#pragma once

#include "cleave/lattice.hpp"
#include "cleave/potential.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace cleave {

/// Raised when two bonded atoms coincide and the gradient is undefined.
class CollapsedBondError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deformed atom positions, indexed like Lattice::atoms().
struct Deformation {
  Positions y;
  /// Boundary stretch a_eps the deformation was built for.
  double a_eps = 0.0;

  /// Throws std::invalid_argument on wrong length or non-finite entries.
  void validate(const Lattice& lat) const;
};

struct EnergyReport {
  /// E = bulk_term + boundary_term + chi_term.
  double raw_energy = 0.0;
  /// eps * E.
  double rescaled_energy = 0.0;
  /// Sum of cell energies W_cell(F) over all triangles.
  double bulk_term = 0.0;
  /// Pair energies of bonds with fewer than two adjacent triangles, weight (1 - n/2).
  double boundary_term = 0.0;
  double chi_term = 0.0;
  /// Plain pair sum over bonds, computed independently of the triangle split.
  double pair_sum_energy = 0.0;
  std::vector<double> per_triangle;
  std::vector<Mat2> per_triangle_gradient;
};

/// Reproducible sum: fixed binary tree over blocks of consecutive entries.
double pairwise_sum(std::span<const double> values);

/// Both forms of the discrete energy. The raw energy uses the pair sum plus chi.
EnergyReport total_energy(const Lattice& lat, std::span<const Vec2> y, const PotentialFamily& fam,
                          const std::optional<ChiPenalty>& chi = std::nullopt);

/// Pair sum E plus chi term, no per-triangle data.
double energy_value(const Lattice& lat, std::span<const Vec2> y, const PotentialFamily& fam,
                    const std::optional<ChiPenalty>& chi = std::nullopt);

/// d(raw_energy)/dy per atom. Throws CollapsedBondError on a zero-length bond.
Positions gradient(const Lattice& lat, std::span<const Vec2> y, const PotentialFamily& fam,
                   const std::optional<ChiPenalty>& chi = std::nullopt);

/// Reusable evaluator for the optimizer hot loop; keeps its own scratch, so
/// one instance per thread.
class EnergyEvaluator {
 public:
  EnergyEvaluator(const Lattice& lat, const PotentialFamily& fam,
                  std::optional<ChiPenalty> chi = std::nullopt);

  /// Returns raw energy (pair sum + chi) and writes the gradient into grad.
  double value_and_gradient(std::span<const Vec2> y, std::span<Vec2> grad);
  double value(std::span<const Vec2> y);
  /// Chi contribution alone.
  double chi_value(std::span<const Vec2> y);

  const Lattice& lattice() const { return lat_; }
  const PotentialFamily& family() const { return fam_; }
  const std::optional<ChiPenalty>& chi() const { return chi_; }

 private:
  const Lattice& lat_;
  PotentialFamily fam_;
  std::optional<ChiPenalty> chi_;
  std::vector<double> bond_terms_;
  std::vector<double> tri_terms_;
};

/// u = (y - x) / sqrt(eps).
Positions rescaled_displacement(const Lattice& lat, std::span<const Vec2> y, double eps);

/// y = x + sqrt(eps) u.
Positions from_rescaled_displacement(const Lattice& lat, std::span<const Vec2> u, double eps);

}  // namespace cleave
