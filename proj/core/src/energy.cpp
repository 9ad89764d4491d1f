#include "cleave/energy.hpp"

#include <cmath>
#include <string>

namespace cleave {

namespace {

constexpr std::size_t kSumBlock = 64;

double tree_sum(const double* v, std::size_t n) {
  if (n <= kSumBlock) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return tree_sum(v, half) + tree_sum(v + half, n - half);
}

void check_size(const Lattice& lat, std::span<const Vec2> y) {
  if (y.size() != lat.atom_count()) {
    throw std::invalid_argument("deformation has " + std::to_string(y.size()) +
                                " atoms, lattice has " + std::to_string(lat.atom_count()));
  }
}

double chi_sum(const Lattice& lat, std::span<const Vec2> y, const ChiPenalty& chi,
               std::vector<double>& scratch) {
  const auto& tris = lat.triangles();
  scratch.resize(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) scratch[t] = chi.value(triangle_gradient(lat, y, t));
  return pairwise_sum(scratch);
}

void add_chi_gradient(const Lattice& lat, std::span<const Vec2> y, const ChiPenalty& chi,
                      std::span<Vec2> grad) {
  const auto& tris = lat.triangles();
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const Triangle& tri = tris[t];
    const Mat2 F = triangle_gradient(lat, y, t);
    if (chi.value(F) == 0.0) continue;
    // F = [y1 - y0, y2 - y0] E^-1, so d chi / d[y1 - y0, y2 - y0] = G E^-T.
    const Mat2 dY = chi.gradient(F) * tri.ref_edges_inv.transpose();
    grad[tri.v[1]] += dY.col(0);
    grad[tri.v[2]] += dY.col(1);
    grad[tri.v[0]] -= dY.col(0) + dY.col(1);
  }
}

}  // namespace

void Deformation::validate(const Lattice& lat) const {
  check_size(lat, y);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!y[i].allFinite()) {
      throw std::invalid_argument("deformation entry " + std::to_string(i) + " is not finite");
    }
  }
}

double pairwise_sum(std::span<const double> values) { return tree_sum(values.data(), values.size()); }

EnergyReport total_energy(const Lattice& lat, std::span<const Vec2> y, const PotentialFamily& fam,
                          const std::optional<ChiPenalty>& chi) {
  check_size(lat, y);
  const double eps = lat.eps();
  const auto& bonds = lat.bonds();
  const auto& tris = lat.triangles();
  EnergyReport rep;

  std::vector<double> terms(bonds.size());
  std::vector<double> boundary(bonds.size(), 0.0);
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    const Bond& bd = bonds[b];
    const double w = fam.value((y[bd.j] - y[bd.i]).norm() / eps);
    terms[b] = w;
    boundary[b] = (1.0 - 0.5 * bd.n_triangles) * w;
  }
  rep.pair_sum_energy = pairwise_sum(terms);
  rep.boundary_term = pairwise_sum(boundary);

  rep.per_triangle.resize(tris.size());
  rep.per_triangle_gradient.resize(tris.size());
  std::vector<double> chis(tris.size(), 0.0);
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const Mat2 F = triangle_gradient(lat, y, t);
    rep.per_triangle_gradient[t] = F;
    rep.per_triangle[t] = w_cell(fam, F, lat.spec().phi);
    if (chi) chis[t] = chi->value(F);
  }
  rep.bulk_term = pairwise_sum(rep.per_triangle);
  rep.chi_term = chi ? pairwise_sum(chis) : 0.0;
  rep.raw_energy = rep.pair_sum_energy + rep.chi_term;
  rep.rescaled_energy = eps * rep.raw_energy;
  return rep;
}

double energy_value(const Lattice& lat, std::span<const Vec2> y, const PotentialFamily& fam,
                    const std::optional<ChiPenalty>& chi) {
  EnergyEvaluator ev(lat, fam, chi);
  return ev.value(y);
}

Positions gradient(const Lattice& lat, std::span<const Vec2> y, const PotentialFamily& fam,
                   const std::optional<ChiPenalty>& chi) {
  EnergyEvaluator ev(lat, fam, chi);
  Positions g(lat.atom_count());
  ev.value_and_gradient(y, g);
  return g;
}

EnergyEvaluator::EnergyEvaluator(const Lattice& lat, const PotentialFamily& fam,
                                 std::optional<ChiPenalty> chi)
    : lat_(lat), fam_(fam), chi_(std::move(chi)) {
  if (chi_) chi_->validate();
}

double EnergyEvaluator::value(std::span<const Vec2> y) {
  check_size(lat_, y);
  const double inv_eps = 1.0 / lat_.eps();
  const auto& bonds = lat_.bonds();
  bond_terms_.resize(bonds.size());
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    bond_terms_[b] = fam_.value((y[bonds[b].j] - y[bonds[b].i]).norm() * inv_eps);
  }
  double e = pairwise_sum(bond_terms_);
  if (chi_) e += chi_sum(lat_, y, *chi_, tri_terms_);
  return e;
}

double EnergyEvaluator::chi_value(std::span<const Vec2> y) {
  check_size(lat_, y);
  return chi_ ? chi_sum(lat_, y, *chi_, tri_terms_) : 0.0;
}

double EnergyEvaluator::value_and_gradient(std::span<const Vec2> y, std::span<Vec2> grad) {
  check_size(lat_, y);
  if (grad.size() != y.size()) throw std::invalid_argument("gradient buffer has wrong length");
  const double eps = lat_.eps();
  const double inv_eps = 1.0 / eps;
  const auto& bonds = lat_.bonds();
  bond_terms_.resize(bonds.size());
  for (Vec2& g : grad) g.setZero();
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    const Bond& bd = bonds[b];
    const Vec2 d = y[bd.j] - y[bd.i];
    const double len = d.norm();
    if (len == 0.0) {
      throw CollapsedBondError("bond " + std::to_string(b) + " between atoms " +
                               std::to_string(bd.i) + " and " + std::to_string(bd.j) +
                               " has zero length");
    }
    double w, dw;
    fam_.value_and_slope(len * inv_eps, w, dw);
    bond_terms_[b] = w;
    if (dw != 0.0) {
      const Vec2 f = (dw * inv_eps / len) * d;
      grad[bd.j] += f;
      grad[bd.i] -= f;
    }
  }
  double e = pairwise_sum(bond_terms_);
  if (chi_) {
    e += chi_sum(lat_, y, *chi_, tri_terms_);
    add_chi_gradient(lat_, y, *chi_, grad);
  }
  return e;
}

Positions rescaled_displacement(const Lattice& lat, std::span<const Vec2> y, double eps) {
  check_size(lat, y);
  const double s = 1.0 / std::sqrt(eps);
  Positions u(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) u[i] = (y[i] - lat.atoms()[i]) * s;
  return u;
}

Positions from_rescaled_displacement(const Lattice& lat, std::span<const Vec2> u, double eps) {
  check_size(lat, u);
  const double s = std::sqrt(eps);
  Positions y(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) y[i] = lat.atoms()[i] + s * u[i];
  return y;
}

}  // namespace cleave
