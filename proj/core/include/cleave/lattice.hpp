#pragma once

#include "cleave/types.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cleave {

/// Geometry of the specimen: strip (0,l)x(0,1), spacing eps, rotation phi.
struct LatticeSpec {
  double l = 2.0;
  double eps = 1.0 / 16.0;
  double phi = 0.0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Reference bond directions v1, v2 and v2 - v1.
enum class Direction : std::uint8_t { V1 = 0, V2 = 1, V2MinusV1 = 2 };

inline constexpr std::array<Direction, 3> kDirections = {
    Direction::V1, Direction::V2, Direction::V2MinusV1};

const char* to_string(Direction d);

/// The three unit lattice vectors for rotation angle phi, indexed by Direction.
std::array<Vec2, 3> lattice_vectors(double phi);

/// Triangle color. Type one: (x, x+eps v1, x+eps v2); type two: the
/// downward cells. Cells of equal type are translates of each other.
enum class TriangleType : std::uint8_t { One = 1, Two = 2 };

struct Bond {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  Direction dir = Direction::V1;
  /// Number of lattice triangles having this bond as a side (0, 1 or 2).
  std::uint8_t n_triangles = 0;
};

struct Triangle {
  std::array<std::uint32_t, 3> v{};      // counterclockwise
  std::array<std::uint32_t, 3> bonds{};  // (v0,v1), (v0,v2), (v1,v2)
  TriangleType type = TriangleType::One;
  Mat2 ref_edges_inv = Mat2::Identity();  // inverse of [x1-x0, x2-x0]
  double y_min = 0.0;
  double y_max = 0.0;
};

/// Width rule for the lateral zone psi(eps) near x1 = 0 and x1 = l.
struct PsiRule {
  enum class Kind { SqrtEps, Fixed };
  Kind kind = Kind::SqrtEps;
  double value = 0.0;

  static PsiRule sqrt_eps() { return {}; }
  static PsiRule fixed(double width) { return {Kind::Fixed, width}; }
  double width(double eps) const;
};

/// Immutable atom/bond/triangle incidence structure of eps L within the
/// closed rectangle [0,l]x[0,1].
class Lattice {
 public:
  static Lattice build(const LatticeSpec& spec, PsiRule psi = PsiRule::sqrt_eps());

  const LatticeSpec& spec() const { return spec_; }
  double eps() const { return spec_.eps; }
  double psi() const { return psi_; }
  /// Max |v . e2| over the lattice vectors; every triangle's x2-shadow has length eps*gamma.
  double gamma() const { return gamma_; }
  const std::array<Vec2, 3>& vectors() const { return vectors_; }

  std::size_t atom_count() const { return atoms_.size(); }
  const Positions& atoms() const { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }

  const std::vector<std::uint32_t>& boundary_left() const { return boundary_left_; }
  const std::vector<std::uint32_t>& boundary_right() const { return boundary_right_; }
  const std::vector<std::uint32_t>& lateral_zone() const { return lateral_zone_; }

  /// True for atoms with x1 <= eps or x1 >= l - eps.
  bool is_frozen(std::size_t atom) const { return frozen_[atom] != 0; }
  bool in_lateral_zone(std::size_t atom) const { return lateral_[atom] != 0; }

  /// Triangles whose open interior meets (0,l) x {x2}, ascending index order.
  std::vector<std::size_t> slice_triangles(double x2) const;

 private:
  Lattice() = default;

  LatticeSpec spec_;
  double psi_ = 0.0;
  double gamma_ = 0.0;
  std::array<Vec2, 3> vectors_{};
  Positions atoms_;
  std::vector<Bond> bonds_;
  std::vector<Triangle> triangles_;
  std::vector<std::uint32_t> boundary_left_;
  std::vector<std::uint32_t> boundary_right_;
  std::vector<std::uint32_t> lateral_zone_;
  std::vector<std::uint8_t> frozen_;
  std::vector<std::uint8_t> lateral_;
  std::vector<std::uint32_t> by_ymin_;  // triangle indices sorted by y_min
};

/// Constant gradient of the affine interpolant of y on triangle t.
Mat2 triangle_gradient(const Lattice& lat, std::span<const Vec2> y, std::size_t t);

std::vector<std::size_t> slice_triangles(const Lattice& lat, double x2);

/// Length of the horizontal chord of the triangle with vertices p at height h.
double chord_length(const std::array<Vec2, 3>& p, double h);

}  // namespace cleave
