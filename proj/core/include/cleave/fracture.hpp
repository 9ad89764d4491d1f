#pragma once

#include "cleave/lattice.hpp"
#include "cleave/potential.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cleave {

struct FractureConfig {
  /// R with inf{W(r) : r >= R} >= beta/2; 0 means derive from the potential.
  double r_threshold = 0.0;
  /// Essentially-broken slack; default a/4.
  std::optional<double> eta;
  /// D^mu stretch bound; default a/10.
  std::optional<double> mu;
  /// Band constant C for crack-band checks (units of eps).
  double band_constant = 5.0;
  /// Split profiles exclude |x1 - g(x2)| < 2 c eps.
  double exclusion_c = 2.0;

  /// Fills defaults for load a and potential fam; throws on invalid values.
  FractureConfig resolved(const PotentialFamily& fam, double a) const;
  void validate(double a) const;
};

struct BrokenSets {
  /// Per triangle: some deformed side longer than 2 R eps.
  std::vector<std::uint8_t> broken;
  /// Per triangle: broken and at least two sides with |dy|/eps > (a - eta)/sqrt(eps).
  std::vector<std::uint8_t> essential;
  std::size_t n_broken = 0;
  std::size_t n_broken_type1 = 0;
  std::size_t n_broken_type2 = 0;
  std::size_t n_essential = 0;
  std::size_t n_essential_type1 = 0;
  double side_threshold = 0.0;       // 2 R (in units of eps)
  double essential_threshold = 0.0;  // (a - eta) / sqrt(eps)
};

/// cfg must be resolved.
BrokenSets classify_broken(const Lattice& lat, std::span<const Vec2> y, const FractureConfig& cfg,
                           double a, double eps);

struct SliceMeasures {
  double I = 0.0;      // heights in (eps, 1 - eps) meeting a broken type-one triangle
  double I_eta = 0.0;  // same for essentially broken type-one triangles
  double D_mu = 0.0;   // exactly one broken type-one triangle and unbroken stretch <= l mu
};

SliceMeasures slice_coverage(const Lattice& lat, std::span<const Vec2> y, const BrokenSets& sets,
                             const FractureConfig& cfg);

/// Union length of the open x2-shadows of the flagged type-one triangles within (lo, hi).
double shadow_measure(const Lattice& lat, std::span<const std::uint8_t> flags, double lo, double hi);

/// Center of the projection of triangle t onto the line spanned by n (unit).
double projection_center(const Lattice& lat, std::size_t t, const Vec2& n);

struct CrackPath {
  enum class Kind { None, Line, Graph };
  Kind kind = Kind::None;
  /// Line: direction v_gamma (x2 >= 0) and offset where it meets x2 = 0.
  Vec2 direction = Vec2::Zero();
  double offset_p = 0.0;
  /// Largest distance of a fitted triangle center from the path.
  double max_deviation = 0.0;
  double max_deviation_type1 = 0.0;
  /// Band half-width in units of eps.
  double band_over_eps = 0.0;
  /// Graph: nodes (x2_k, g_k) with slopes between them.
  std::vector<double> node_x2;
  std::vector<double> node_g;
  std::vector<double> slopes;
  std::size_t n_fitted = 0;

  bool found() const { return kind != Kind::None; }
  /// x1 of the path at height x2.
  double cut(double x2) const;
};

/// Path through the essentially broken triangles (broken ones if none are
/// essential). kind None when nothing is broken.
CrackPath crack_path(const Lattice& lat, const BrokenSets& sets, double phi);

struct Profile {
  enum class Kind { Elastic, Split };
  Kind kind = Kind::Elastic;
  double a = 0.0;
  /// Split: the cut; must meet both horizontal boundaries inside (0, l).
  CrackPath path;
  double exclusion_c = 2.0;

  static Profile elastic(double a);
  static Profile split(double a, CrackPath path, double exclusion_c = 2.0);
};

struct ProfileDistance {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double h1 = 0.0;
  /// Optimal x2 translations (left; right for split profiles).
  double shift_left = 0.0;
  double shift_right = 0.0;
  /// mean u1 right of the band minus mean u1 left of it (split only).
  double jump_u1 = 0.0;
  std::size_t atoms_used = 0;
};

/// u is the rescaled displacement. Throws std::invalid_argument if a split
/// profile's cut does not cross both horizontal boundaries inside (0, l).
ProfileDistance limit_profile_distance(const Lattice& lat, std::span<const Vec2> u,
                                       const Profile& profile);

/// Mean of (grad y - Id) / sqrt(eps) over triangles not in the broken set.
Mat2 mean_rescaled_strain(const Lattice& lat, std::span<const Vec2> y, const BrokenSets& sets);

struct FractureReport {
  FractureConfig config;
  BrokenSets sets;
  SliceMeasures slices;
  CrackPath path;
  std::optional<ProfileDistance> elastic_distance;
  std::optional<ProfileDistance> split_distance;
  Mat2 mean_strain = Mat2::Zero();
};

/// Runs the full post-processing chain for deformation y under load a.
FractureReport analyze_fracture(const Lattice& lat, std::span<const Vec2> y,
                                const PotentialFamily& fam, const FractureConfig& cfg, double a);

}  // namespace cleave
