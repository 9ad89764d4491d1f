#pragma once

#include "cleave/types.hpp"

#include <optional>
#include <string>

namespace cleave {

struct PairDerivs {
  double first = 0.0;   // W'
  double second = 0.0;  // W''
};

/// Lennard-Jones-type pair potential W with W(1) = 0, W'' (1) = alpha > 0 and
/// W -> beta at infinity.
///
/// Two families are available. `lennard_jones(beta)` is W(r) = beta (r^-6 - 1)^2,
/// capped at 1e12 beta near r = 0. `synthetic(alpha, alpha_prime, beta)` is
/// the cubic Taylor polynomial alpha s^2/2 + alpha' s^3/6 (s = r - 1) blended
/// into the constant beta by a C^4 smoothstep, so W == beta exactly for
/// r >= tail_radius() and the third derivative at 1 is exactly alpha'.
class PotentialFamily {
 public:
  enum class Kind { LennardJones, Synthetic };

  static PotentialFamily lennard_jones(double beta);
  static PotentialFamily synthetic(double alpha, double alpha_prime, double beta);

  Kind kind() const { return kind_; }
  std::string name() const;
  double alpha() const { return alpha_; }
  double alpha_prime() const { return alpha_prime_; }
  double beta() const { return beta_; }
  /// Synthetic: W == beta beyond this radius. Lennard-Jones: |W - beta| <= 1e-3 beta beyond it.
  double tail_radius() const { return tail_radius_; }

  double value(double r) const;
  PairDerivs derivs(double r) const;

  /// W and W' in one pass; the energy hot loop uses this.
  void value_and_slope(double r, double& w, double& dw) const;

 private:
  PotentialFamily() = default;

  Kind kind_ = Kind::Synthetic;
  double alpha_ = 0.0;
  double alpha_prime_ = 0.0;
  double beta_ = 0.0;
  double tail_radius_ = 0.0;
  // Synthetic: blend window [1 + blend_lo_, 1 + blend_hi_], compression sextic coefficient.
  double blend_lo_ = 0.0;
  double blend_hi_ = 0.0;
  double c6_ = 0.0;
  // Lennard-Jones: radius below which W is held at the cap.
  double r_cap_ = 0.0;
};

/// W(r); throws std::invalid_argument for r < 0.
double w_pair(const PotentialFamily& fam, double r);

/// (W'(r), W''(r)); throws std::invalid_argument for r <= 0.
PairDerivs w_pair_derivs(const PotentialFamily& fam, double r);

/// Finite, frame indifferent orientation penalty chi(F) = kappa * s_det(det F) * s_norm(|F|).
/// s_det is 1 for det F <= 0 and 0 for det F >= det_width; s_norm is 1 for
/// |F| <= r_chi and 0 for |F| >= r_chi + smoothing_width; both are C^1 smoothsteps.
struct ChiPenalty {
  double kappa = 10.0;
  double r_chi = 10.0;
  double smoothing_width = 1.0;
  double det_width = 0.5;

  static ChiPenalty defaults(double beta) { return ChiPenalty{10.0 * beta, 10.0, 1.0, 0.5}; }
  void validate() const;
  double value(const Mat2& F) const;
  /// d chi / dF.
  Mat2 gradient(const Mat2& F) const;
};

/// Cell energy 1/2 sum_v W(|F v|) over the three lattice directions for angle phi,
/// plus chi(F) when a penalty is given.
double w_cell(const PotentialFamily& fam, const Mat2& F, double phi,
              const std::optional<ChiPenalty>& chi = std::nullopt);

/// d W_cell / dF (without chi).
Mat2 w_cell_gradient(const PotentialFamily& fam, const Mat2& F, double phi);

/// Linearized cell energy density about the identity; depends only on sym(G).
double quadratic_form(double alpha, const Mat2& G);

/// Frobenius distance from F to O(2).
double dist_O2(const Mat2& F);

/// Smallest R > 1 with inf{W(r) : r >= R} >= beta/2, located by bisection and
/// confirmed on a sample grid up to 10 * tail_radius.
double r_threshold_half_beta(const PotentialFamily& fam);

}  // namespace cleave
