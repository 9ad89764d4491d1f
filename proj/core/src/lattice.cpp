#include "cleave/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace cleave {

namespace {

std::int64_t pack(std::int64_t a, std::int64_t b) {
  return (a << 32) ^ (b & 0xffffffffLL);
}

}  // namespace

void LatticeSpec::validate() const {
  if (!std::isfinite(l) || l <= 1.0 / kSqrt3) {
    throw std::invalid_argument("lattice.l: must exceed 1/sqrt(3), got " + std::to_string(l));
  }
  if (!std::isfinite(eps) || eps <= 0.0 || eps >= l || eps >= 1.0) {
    throw std::invalid_argument("lattice.eps: must satisfy 0 < eps < min(l, 1), got " +
                                std::to_string(eps));
  }
  if (!std::isfinite(phi) || phi < 0.0 || phi >= kPi / 3.0) {
    throw std::invalid_argument("lattice.phi: must lie in [0, pi/3), got " + std::to_string(phi));
  }
}

const char* to_string(Direction d) {
  switch (d) {
    case Direction::V1: return "v1";
    case Direction::V2: return "v2";
    case Direction::V2MinusV1: return "v2-v1";
  }
  return "?";
}

std::array<Vec2, 3> lattice_vectors(double phi) {
  const Vec2 v1(std::cos(phi), std::sin(phi));
  const Vec2 v2(std::cos(phi + kPi / 3.0), std::sin(phi + kPi / 3.0));
  return {v1, v2, v2 - v1};
}

double PsiRule::width(double eps) const {
  return kind == Kind::SqrtEps ? std::sqrt(eps) : value;
}

Lattice Lattice::build(const LatticeSpec& spec, PsiRule psi_rule) {
  spec.validate();
  Lattice lat;
  lat.spec_ = spec;
  lat.psi_ = psi_rule.width(spec.eps);
  if (!(lat.psi_ > 0.0)) throw std::invalid_argument("lattice.psi: width must be positive");
  lat.vectors_ = lattice_vectors(spec.phi);
  lat.gamma_ = 0.0;
  for (const Vec2& v : lat.vectors_) lat.gamma_ = std::max(lat.gamma_, std::abs(v.y()));

  const double eps = spec.eps;
  const double l = spec.l;
  const double tol = 1e-9 * eps;
  const Vec2 v1 = lat.vectors_[0];
  const Vec2 v2 = lat.vectors_[1];

  // Bounding box of the rectangle in lattice coordinates.
  Mat2 basis;
  basis.col(0) = eps * v1;
  basis.col(1) = eps * v2;
  const Mat2 inv = basis.inverse();
  double lo1 = 1e300, hi1 = -1e300, lo2 = 1e300, hi2 = -1e300;
  for (const Vec2& c : {Vec2(0, 0), Vec2(l, 0), Vec2(0, 1), Vec2(l, 1)}) {
    const Vec2 lam = inv * c;
    lo1 = std::min(lo1, lam.x());
    hi1 = std::max(hi1, lam.x());
    lo2 = std::min(lo2, lam.y());
    hi2 = std::max(hi2, lam.y());
  }
  const auto l1_min = static_cast<std::int64_t>(std::floor(lo1)) - 1;
  const auto l1_max = static_cast<std::int64_t>(std::ceil(hi1)) + 1;
  const auto l2_min = static_cast<std::int64_t>(std::floor(lo2)) - 1;
  const auto l2_max = static_cast<std::int64_t>(std::ceil(hi2)) + 1;

  std::unordered_map<std::int64_t, std::uint32_t> index;
  std::vector<std::array<std::int64_t, 2>> coords;
  for (std::int64_t b = l2_min; b <= l2_max; ++b) {
    for (std::int64_t a = l1_min; a <= l1_max; ++a) {
      const Vec2 x = eps * (static_cast<double>(a) * v1 + static_cast<double>(b) * v2);
      if (x.x() < -tol || x.x() > l + tol || x.y() < -tol || x.y() > 1.0 + tol) continue;
      index.emplace(pack(a, b), static_cast<std::uint32_t>(lat.atoms_.size()));
      lat.atoms_.push_back(x);
      coords.push_back({a, b});
    }
  }

  auto find = [&](std::int64_t a, std::int64_t b) -> std::int64_t {
    auto it = index.find(pack(a, b));
    return it == index.end() ? -1 : static_cast<std::int64_t>(it->second);
  };

  // Bonds, keyed by the lattice coordinates of their lower-index endpoint.
  std::unordered_map<std::int64_t, std::uint32_t> bond_of;
  auto bond_key = [](std::uint32_t i, std::uint32_t j) {
    return pack(std::min(i, j), std::max(i, j));
  };
  const std::array<std::array<std::int64_t, 2>, 3> steps = {{{1, 0}, {0, 1}, {-1, 1}}};
  for (std::uint32_t i = 0; i < coords.size(); ++i) {
    for (std::size_t d = 0; d < 3; ++d) {
      const std::int64_t j = find(coords[i][0] + steps[d][0], coords[i][1] + steps[d][1]);
      if (j < 0) continue;
      Bond bond;
      bond.i = i;
      bond.j = static_cast<std::uint32_t>(j);
      bond.dir = static_cast<Direction>(d);
      bond_of.emplace(bond_key(bond.i, bond.j), static_cast<std::uint32_t>(lat.bonds_.size()));
      lat.bonds_.push_back(bond);
    }
  }

  auto add_triangle = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c, TriangleType type) {
    Triangle t;
    t.v = {a, b, c};
    t.type = type;
    t.bonds = {bond_of.at(bond_key(a, b)), bond_of.at(bond_key(a, c)),
               bond_of.at(bond_key(b, c))};
    Mat2 edges;
    edges.col(0) = lat.atoms_[b] - lat.atoms_[a];
    edges.col(1) = lat.atoms_[c] - lat.atoms_[a];
    t.ref_edges_inv = edges.inverse();
    t.y_min = std::min({lat.atoms_[a].y(), lat.atoms_[b].y(), lat.atoms_[c].y()});
    t.y_max = std::max({lat.atoms_[a].y(), lat.atoms_[b].y(), lat.atoms_[c].y()});
    for (std::uint32_t bi : t.bonds) ++lat.bonds_[bi].n_triangles;
    lat.triangles_.push_back(t);
  };

  for (std::uint32_t i = 0; i < coords.size(); ++i) {
    const auto [a, b] = coords[i];
    const std::int64_t right = find(a + 1, b);
    const std::int64_t up = find(a, b + 1);
    const std::int64_t up_left = find(a - 1, b + 1);
    if (right >= 0 && up >= 0) {
      add_triangle(i, static_cast<std::uint32_t>(right), static_cast<std::uint32_t>(up),
                   TriangleType::One);
    }
    // Type two is anchored at its lower vertex so it is found even when the
    // fourth point of the rhombus lies outside the rectangle.
    if (up >= 0 && up_left >= 0) {
      add_triangle(i, static_cast<std::uint32_t>(up), static_cast<std::uint32_t>(up_left),
                   TriangleType::Two);
    }
  }
  if (lat.triangles_.empty()) {
    throw std::invalid_argument("lattice.eps: too large, no lattice triangle fits in the strip");
  }

  const std::size_t n = lat.atoms_.size();
  lat.frozen_.assign(n, 0);
  lat.lateral_.assign(n, 0);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double x1 = lat.atoms_[i].x();
    if (x1 <= eps + tol) lat.boundary_left_.push_back(i);
    if (x1 >= l - eps - tol) lat.boundary_right_.push_back(i);
    if (x1 <= eps + tol || x1 >= l - eps - tol) lat.frozen_[i] = 1;
    if (x1 <= lat.psi_ + tol || x1 >= l - lat.psi_ - tol) {
      lat.lateral_[i] = 1;
      lat.lateral_zone_.push_back(i);
    }
  }
  if (lat.boundary_left_.empty() || lat.boundary_right_.empty()) {
    throw std::invalid_argument("lattice: empty boundary atom set");
  }

  lat.by_ymin_.resize(lat.triangles_.size());
  for (std::uint32_t t = 0; t < lat.by_ymin_.size(); ++t) lat.by_ymin_[t] = t;
  std::stable_sort(lat.by_ymin_.begin(), lat.by_ymin_.end(), [&](std::uint32_t p, std::uint32_t q) {
    return lat.triangles_[p].y_min < lat.triangles_[q].y_min;
  });
  return lat;
}

std::vector<std::size_t> Lattice::slice_triangles(double x2) const {
  std::vector<std::size_t> out;
  const double height = spec_.eps * gamma_;
  const double tie = 1e-12 * spec_.eps;
  auto first_above = [&](double h) {
    return std::upper_bound(by_ymin_.begin(), by_ymin_.end(), h,
                            [&](double v, std::uint32_t t) { return v < triangles_[t].y_min; });
  };
  auto candidates = [&](double h) {
    return std::pair{std::lower_bound(by_ymin_.begin(), by_ymin_.end(), h - height - 4 * tie,
                                      [&](std::uint32_t t, double v) {
                                        return triangles_[t].y_min < v;
                                      }),
                     first_above(h + 4 * tie)};
  };

  double h = x2;
  auto [lo, hi] = candidates(h);
  for (auto it = lo; it != hi; ++it) {
    const Triangle& t = triangles_[*it];
    if (std::abs(h - t.y_min) <= tie || std::abs(h - t.y_max) <= tie) {
      h = x2 + 1e-9 * spec_.eps;
      std::tie(lo, hi) = candidates(h);
      break;
    }
  }
  for (auto it = lo; it != hi; ++it) {
    const Triangle& t = triangles_[*it];
    if (t.y_min < h && h < t.y_max) out.push_back(*it);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Mat2 triangle_gradient(const Lattice& lat, std::span<const Vec2> y, std::size_t t) {
  const Triangle& tri = lat.triangles()[t];
  Mat2 edges;
  edges.col(0) = y[tri.v[1]] - y[tri.v[0]];
  edges.col(1) = y[tri.v[2]] - y[tri.v[0]];
  return edges * tri.ref_edges_inv;
}

std::vector<std::size_t> slice_triangles(const Lattice& lat, double x2) {
  return lat.slice_triangles(x2);
}

double chord_length(const std::array<Vec2, 3>& p, double h) {
  double lo = 1e300, hi = -1e300;
  int hits = 0;
  for (int k = 0; k < 3; ++k) {
    const Vec2& a = p[k];
    const Vec2& b = p[(k + 1) % 3];
    const double ymin = std::min(a.y(), b.y());
    const double ymax = std::max(a.y(), b.y());
    if (h < ymin || h > ymax || ymax == ymin) continue;
    const double s = (h - a.y()) / (b.y() - a.y());
    const double x = a.x() + s * (b.x() - a.x());
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    ++hits;
  }
  return hits >= 2 ? hi - lo : 0.0;
}

}  // namespace cleave
