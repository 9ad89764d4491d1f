#pragma once

#include "cleave/lattice.hpp"
#include "cleave/potential.hpp"

#include <stdexcept>
#include <vector>

namespace cleave {

/// Thrown when the inner minimization for the reduced energy fails to converge.
class ReducedEnergyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReducedEnergyOptions {
  double grad_tol = 1e-12;
  int max_newton_iter = 200;
};

struct ReducedEnergyResult {
  double value = 0.0;
  /// Optimal cell gradient [[r, z+y], [z-y, 1+x]].
  Mat2 minimizer = Mat2::Identity();
  double grad_norm = 0.0;
  int iterations = 0;
  bool used_fallback = false;
};

/// inf { W_cell(F) : e1^T F e1 = r } by multistart damped Newton over the
/// three free entries of F, with a Nelder-Mead fallback.
ReducedEnergyResult reduced_energy_solve(const PotentialFamily& fam, double phi, double r,
                                         const ReducedEnergyOptions& opts = {});

double reduced_energy_numeric(const PotentialFamily& fam, double phi, double r,
                              const ReducedEnergyOptions& opts = {});

/// (6 alpha + 7 alpha' - 2 (3 alpha - alpha') cos 6 phi) / 108.
double reduced_cubic_coefficient(double alpha, double alpha_prime, double phi);

/// alpha (r-1)^2 / 4 + c3 (r-1)^3 for r >= 1 (no quartic term).
double reduced_energy_expansion(double alpha, double alpha_prime, double phi, double r);

enum class MinorantVariant { QuadraticCutoff, CubicRefined };

struct MinorantParams {
  double alpha = 0.0;
  double alpha_prime = 0.0;
  double phi = 0.0;
  double delta = 0.0;  // QuadraticCutoff: curvature deficit
  double eta = 0.0;    // width of the polynomial piece [1, 1+eta]
  double quartic = 0.0;  // CubicRefined: C in f(r) = ... - C (r-1)^4
  MinorantVariant variant = MinorantVariant::QuadraticCutoff;
};

/// Piecewise convex lower bound V of the reduced energy: 0 for r <= 1, a
/// polynomial piece on [1, 1+eta], affine continuation beyond.
class ConvexMinorant {
 public:
  /// Throws std::invalid_argument if the parameters do not give a convex V.
  explicit ConvexMinorant(const MinorantParams& params);

  double operator()(double r) const;
  double slope(double r) const;
  /// Analytic right second derivative at r = 1.
  double right_curvature_at_one() const;
  const MinorantParams& params() const { return p_; }

 private:
  double poly(double s) const;
  double poly_slope(double s) const;
  double poly_curv(double s) const;

  MinorantParams p_;
};

ConvexMinorant convex_minorant(double alpha, double alpha_prime, double phi, double delta,
                               double eta, MinorantVariant variant, double quartic = 0.0);

/// max_v |v . e2| = sin(phi + pi/3).
double gamma_of(double phi);

/// Lattice directions attaining gamma (two at phi = 0, else v2 only).
std::vector<Direction> optimal_directions(double phi);

/// (1 - sqrt(3) sqrt(1 - gamma^2) / gamma) / 2.
double p_gamma(double gamma);

struct CleavagePrediction {
  double alpha = 0.0;
  double alpha_prime = 0.0;
  double beta = 0.0;
  double l = 0.0;
  double phi = 0.0;

  double gamma = 0.0;
  std::vector<Direction> v_gamma;
  Vec2 v_gamma_vector = Vec2::Zero();
  double p_gamma = 0.0;
  double a_crit = 0.0;
  double crack_energy = 0.0;
  /// Coefficient of sqrt(eps) a^3 in the discrete elastic energy.
  double cubic_coeff = 0.0;

  double elastic_energy(double a) const;
  double limit_energy(double a) const;
  double refined_energy(double a, double eps) const;
};

CleavagePrediction cleavage_prediction(double alpha, double alpha_prime, double beta, double l,
                                       double phi);

}  // namespace cleave
