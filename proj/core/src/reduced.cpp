#include "cleave/reduced.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace cleave {

namespace {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

// F(q) = [[r, z + y], [z - y, 1 + x]], q = (x, y, z).
Mat2 cell_of(double r, const Vec3& q) {
  Mat2 F;
  F << r, q(2) + q(1), q(2) - q(1), 1.0 + q(0);
  return F;
}

// d vec(F) / dq with vec(F) = (F00, F01, F10, F11).
Eigen::Matrix<double, 4, 3> jacobian() {
  Eigen::Matrix<double, 4, 3> J;
  J << 0, 0, 0,
       0, 1, 1,
       0, -1, 1,
       1, 0, 0;
  return J;
}

struct CellModel {
  const PotentialFamily& fam;
  std::array<Vec2, 3> vs;
  double r;

  double value(const Vec3& q) const {
    const Mat2 F = cell_of(r, q);
    double sum = 0.0;
    for (const Vec2& v : vs) sum += fam.value((F * v).norm());
    return 0.5 * sum;
  }

  // Value, gradient and Hessian in q.
  double eval(const Vec3& q, Vec3& grad, Mat3& hess) const {
    const Mat2 F = cell_of(r, q);
    double sum = 0.0;
    Vec4 g = Vec4::Zero();
    Mat4 H = Mat4::Zero();
    for (const Vec2& v : vs) {
      const Vec2 fv = F * v;
      const double rho = fv.norm();
      sum += fam.value(rho);
      if (rho == 0.0) continue;
      const PairDerivs d = fam.derivs(rho);
      const Vec2 n = fv / rho;
      Vec4 dr;
      dr << n(0) * v(0), n(0) * v(1), n(1) * v(0), n(1) * v(1);
      g += 0.5 * d.first * dr;
      H += 0.5 * d.second * dr * dr.transpose();
      const Mat2 proj = Mat2::Identity() - n * n.transpose();
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k)
            for (int m = 0; m < 2; ++m)
              H(2 * i + j, 2 * k + m) += 0.5 * d.first / rho * proj(i, k) * v(j) * v(m);
    }
    const auto J = jacobian();
    grad = J.transpose() * g;
    hess = J.transpose() * H * J;
    return 0.5 * sum;
  }
};

struct LocalResult {
  Vec3 q;
  double value;
  double grad_norm;
  int iterations;
};

LocalResult damped_newton(const CellModel& m, Vec3 q, double tol, int max_iter) {
  Vec3 g;
  Mat3 H;
  double f = m.eval(q, g, H);
  double lambda = 0.0;
  int it = 0;
  for (; it < max_iter && g.norm() > tol; ++it) {
    bool stepped = false;
    for (int attempt = 0; attempt < 60 && !stepped; ++attempt) {
      const Mat3 A = H + lambda * Mat3::Identity();
      Eigen::LLT<Mat3> llt(A);
      if (llt.info() != Eigen::Success) {
        lambda = std::max(1e-10 * (1.0 + H.norm()), 4.0 * lambda);
        continue;
      }
      const Vec3 step = -llt.solve(g);
      const Vec3 trial = q + step;
      Vec3 g_trial;
      Mat3 H_trial;
      const double f_trial = m.eval(trial, g_trial, H_trial);
      if (f_trial <= f || ((f_trial - f) <= 1e-15 * std::abs(f) && g_trial.norm() < g.norm())) {
        q = trial;
        f = f_trial;
        g = g_trial;
        H = H_trial;
        lambda *= 0.25;
        if (lambda < 1e-14) lambda = 0.0;
        stepped = true;
      } else {
        lambda = std::max(1e-10 * (1.0 + H.norm()), 4.0 * lambda);
      }
    }
    if (!stepped) break;
  }
  return {q, f, g.norm(), it};
}

Vec3 nelder_mead(const CellModel& m, const Vec3& start, double scale, int max_iter) {
  std::array<Vec3, 4> simplex;
  std::array<double, 4> vals;
  simplex[0] = start;
  for (int k = 0; k < 3; ++k) {
    simplex[k + 1] = start;
    simplex[k + 1](k) += scale;
  }
  for (int k = 0; k < 4; ++k) vals[k] = m.value(simplex[k]);
  for (int it = 0; it < max_iter; ++it) {
    std::array<int, 4> order = {0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = order[0], worst = order[3], second = order[2];
    if (std::abs(vals[worst] - vals[best]) <= 1e-18 * (1.0 + std::abs(vals[best])) &&
        (simplex[worst] - simplex[best]).norm() < 1e-12) {
      break;
    }
    Vec3 centroid = Vec3::Zero();
    for (int k = 0; k < 3; ++k) centroid += simplex[order[k]];
    centroid /= 3.0;
    const Vec3 xr = centroid + (centroid - simplex[worst]);
    const double fr = m.value(xr);
    if (fr < vals[best]) {
      const Vec3 xe = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = m.value(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        vals[worst] = fe;
      } else {
        simplex[worst] = xr;
        vals[worst] = fr;
      }
    } else if (fr < vals[second]) {
      simplex[worst] = xr;
      vals[worst] = fr;
    } else {
      const Vec3 xc = centroid + 0.5 * (simplex[worst] - centroid);
      const double fc = m.value(xc);
      if (fc < vals[worst]) {
        simplex[worst] = xc;
        vals[worst] = fc;
      } else {
        for (int k = 1; k < 4; ++k) {
          simplex[order[k]] = simplex[best] + 0.5 * (simplex[order[k]] - simplex[best]);
          vals[order[k]] = m.value(simplex[order[k]]);
        }
      }
    }
  }
  int best = 0;
  for (int k = 1; k < 4; ++k)
    if (vals[k] < vals[best]) best = k;
  return simplex[best];
}

}  // namespace

ReducedEnergyResult reduced_energy_solve(const PotentialFamily& fam, double phi, double r,
                                         const ReducedEnergyOptions& opts) {
  ReducedEnergyResult out;
  if (!std::isfinite(r)) throw std::invalid_argument("reduced_energy: r must be finite");
  // W_cell(-F) = W_cell(F), so the reduced energy is even in r.
  const double ra = std::abs(r);
  if (ra <= 1.0) {
    // A rotation with e1^T Q e1 = r attains zero energy.
    const double c = r;
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    out.minimizer << c, -s, s, c;
    return out;
  }
  const CellModel model{fam, lattice_vectors(phi), ra};
  const double s = ra - 1.0;
  const double tol = opts.grad_tol * std::max(1.0, fam.alpha());

  std::vector<Vec3> seeds;
  seeds.emplace_back(-s / 3.0, 0.0, 0.0);
  seeds.emplace_back(-2.0 + s / 3.0, 0.0, 0.0);  // reflection branch P F
  for (const Vec2& v : model.vs) {
    if (std::abs(v.y()) < 1e-9) continue;
    // Keeps F v = v: F = Id + s e1 (x) (e1 - (v_x / v_y) e2).
    const double zy = -s * v.x() / (2.0 * v.y());
    seeds.emplace_back(0.0, zy, zy);
    seeds.emplace_back(-2.0, zy, zy);
  }

  // Coarse scan of the free entries: folded cells (det F near 0) can keep
  // two bonds near unit length for large r and are missed by the seeds above.
  {
    double bmax = 1.0;
    for (const Vec2& v : model.vs)
      if (std::abs(v.y()) > 0.2) bmax = std::max(bmax, ra * std::abs(v.x() / v.y()) + 1.0);
    constexpr int nb = 41, nc = 13;
    struct Cand {
      double value;
      Vec3 q;
    };
    std::vector<Cand> cands;
    cands.reserve(nb * nc * nc);
    for (int ib = 0; ib < nb; ++ib)
      for (int ic = 0; ic < nc; ++ic)
        for (int id = 0; id < nc; ++id) {
          const double b = -bmax + 2.0 * bmax * ib / (nb - 1);
          const double c = -1.5 + 3.0 * ic / (nc - 1);
          const double d = -1.5 + 3.0 * id / (nc - 1);
          const Vec3 q(d - 1.0, 0.5 * (b - c), 0.5 * (b + c));
          cands.push_back({model.value(q), q});
        }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.value < b.value; });
    const double spacing = 3.0 / (nc - 1);
    std::vector<Vec3> picked;
    for (const Cand& c : cands) {
      bool far = true;
      for (const Vec3& p : picked) far = far && (p - c.q).lpNorm<Eigen::Infinity>() > 2.0 * spacing;
      if (far) picked.push_back(c.q);
      if (picked.size() == 4) break;
    }
    seeds.insert(seeds.end(), picked.begin(), picked.end());
  }

  bool have = false;
  LocalResult best{Vec3::Zero(), 0.0, 0.0, 0};
  int total_iter = 0;
  for (const Vec3& seed : seeds) {
    LocalResult res = damped_newton(model, seed, tol, opts.max_newton_iter);
    total_iter += res.iterations;
    if (res.grad_norm > tol) {
      const Vec3 nm = nelder_mead(model, res.q, std::max(1e-3, 0.1 * s), 4000);
      LocalResult polished = damped_newton(model, nm, tol, opts.max_newton_iter);
      total_iter += polished.iterations;
      if (polished.value <= res.value) res = polished;
      out.used_fallback = true;
    }
    // Reflected cells give equal energies; on ties keep det F > 0.
    const double tie = 1e-13 * std::max(std::abs(best.value), 1e-300);
    const bool orientation_preserving = cell_of(ra, res.q).determinant() > 0.0;
    const bool best_preserving = have && cell_of(ra, best.q).determinant() > 0.0;
    if (!have || res.value < best.value - tie ||
        (res.value <= best.value + tie && orientation_preserving && !best_preserving)) {
      best = res;
      have = true;
    }
  }
  if (best.grad_norm > 1e3 * tol) {
    throw ReducedEnergyError("reduced_energy: inner minimization did not converge at r = " +
                             std::to_string(r) + " (gradient norm " +
                             std::to_string(best.grad_norm) + ")");
  }
  out.value = std::max(0.0, best.value);
  out.minimizer = cell_of(ra, best.q);
  if (r < 0.0) out.minimizer = -out.minimizer;
  out.grad_norm = best.grad_norm;
  out.iterations = total_iter;
  return out;
}

double reduced_energy_numeric(const PotentialFamily& fam, double phi, double r,
                              const ReducedEnergyOptions& opts) {
  return reduced_energy_solve(fam, phi, r, opts).value;
}

double reduced_cubic_coefficient(double alpha, double alpha_prime, double phi) {
  return (6.0 * alpha + 7.0 * alpha_prime - 2.0 * (3.0 * alpha - alpha_prime) * std::cos(6.0 * phi)) /
         108.0;
}

double reduced_energy_expansion(double alpha, double alpha_prime, double phi, double r) {
  if (r < 1.0) throw std::invalid_argument("reduced_energy_expansion: requires r >= 1");
  const double s = r - 1.0;
  return alpha * s * s / 4.0 + reduced_cubic_coefficient(alpha, alpha_prime, phi) * s * s * s;
}

ConvexMinorant::ConvexMinorant(const MinorantParams& params) : p_(params) {
  if (!(p_.alpha > 0.0)) throw std::invalid_argument("convex_minorant: alpha must be positive");
  if (!(p_.eta > 0.0)) throw std::invalid_argument("convex_minorant: eta must be positive");
  if (p_.variant == MinorantVariant::QuadraticCutoff) {
    if (!(p_.delta > 0.0) || !(p_.alpha / 4.0 - p_.delta > 0.0)) {
      throw std::invalid_argument("convex_minorant: need 0 < delta < alpha/4");
    }
  } else if (!(p_.quartic >= 0.0)) {
    throw std::invalid_argument("convex_minorant: quartic constant must be non-negative");
  }
  // Convexity: V'' >= 0 on the polynomial piece and V' >= 0 at the junction.
  for (int k = 0; k <= 1000; ++k) {
    const double s = p_.eta * k / 1000.0;
    if (poly_curv(s) < -1e-12 * p_.alpha || poly_slope(s) < -1e-12 * p_.alpha) {
      throw std::invalid_argument("convex_minorant: parameters give a non-convex V");
    }
  }
}

double ConvexMinorant::poly(double s) const {
  if (p_.variant == MinorantVariant::QuadraticCutoff) return (p_.alpha / 4.0 - p_.delta) * s * s;
  const double c3 = reduced_cubic_coefficient(p_.alpha, p_.alpha_prime, p_.phi);
  return s * s * (p_.alpha / 4.0 + s * (c3 - p_.quartic * s));
}

double ConvexMinorant::poly_slope(double s) const {
  if (p_.variant == MinorantVariant::QuadraticCutoff) return 2.0 * (p_.alpha / 4.0 - p_.delta) * s;
  const double c3 = reduced_cubic_coefficient(p_.alpha, p_.alpha_prime, p_.phi);
  return s * (p_.alpha / 2.0 + s * (3.0 * c3 - 4.0 * p_.quartic * s));
}

double ConvexMinorant::poly_curv(double s) const {
  if (p_.variant == MinorantVariant::QuadraticCutoff) return 2.0 * (p_.alpha / 4.0 - p_.delta);
  const double c3 = reduced_cubic_coefficient(p_.alpha, p_.alpha_prime, p_.phi);
  return p_.alpha / 2.0 + s * (6.0 * c3 - 12.0 * p_.quartic * s);
}

double ConvexMinorant::operator()(double r) const {
  const double s = r - 1.0;
  if (s <= 0.0) return 0.0;
  if (s <= p_.eta) return poly(s);
  return poly(p_.eta) + poly_slope(p_.eta) * (s - p_.eta);
}

double ConvexMinorant::slope(double r) const {
  const double s = r - 1.0;
  if (s <= 0.0) return 0.0;
  if (s <= p_.eta) return poly_slope(s);
  return poly_slope(p_.eta);
}

double ConvexMinorant::right_curvature_at_one() const { return poly_curv(0.0); }

ConvexMinorant convex_minorant(double alpha, double alpha_prime, double phi, double delta,
                               double eta, MinorantVariant variant, double quartic) {
  return ConvexMinorant(MinorantParams{alpha, alpha_prime, phi, delta, eta, quartic, variant});
}

double gamma_of(double phi) { return std::sin(phi + kPi / 3.0); }

std::vector<Direction> optimal_directions(double phi) {
  const auto vs = lattice_vectors(phi);
  double best = 0.0;
  for (const Vec2& v : vs) best = std::max(best, std::abs(v.y()));
  std::vector<Direction> out;
  for (Direction d : kDirections) {
    if (std::abs(vs[static_cast<int>(d)].y()) >= best - 1e-12) out.push_back(d);
  }
  return out;
}

double p_gamma(double gamma) {
  return 0.5 * (1.0 - kSqrt3 * std::sqrt(std::max(0.0, 1.0 - gamma * gamma)) / gamma);
}

double CleavagePrediction::elastic_energy(double a) const {
  return alpha * l * a * a / kSqrt3;
}

double CleavagePrediction::limit_energy(double a) const {
  return std::min(elastic_energy(a), crack_energy);
}

double CleavagePrediction::refined_energy(double a, double eps) const {
  return std::min(elastic_energy(a) + cubic_coeff * std::sqrt(eps) * a * a * a, crack_energy);
}

CleavagePrediction cleavage_prediction(double alpha, double alpha_prime, double beta, double l,
                                       double phi) {
  if (!(alpha > 0.0)) throw std::invalid_argument("prediction: alpha must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("prediction: beta must be positive");
  if (!(l > 1.0 / kSqrt3)) throw std::invalid_argument("prediction: l must exceed 1/sqrt(3)");
  if (!(phi >= 0.0 && phi < kPi / 3.0)) {
    throw std::invalid_argument("prediction: phi must lie in [0, pi/3)");
  }
  if (!std::isfinite(alpha_prime)) throw std::invalid_argument("prediction: alpha_prime must be finite");
  CleavagePrediction p;
  p.alpha = alpha;
  p.alpha_prime = alpha_prime;
  p.beta = beta;
  p.l = l;
  p.phi = phi;
  p.gamma = gamma_of(phi);
  p.v_gamma = optimal_directions(phi);
  p.v_gamma_vector = lattice_vectors(phi)[static_cast<int>(p.v_gamma.front())];
  if (p.v_gamma_vector.y() < 0.0) p.v_gamma_vector = -p.v_gamma_vector;
  p.p_gamma = p_gamma(p.gamma);
  p.a_crit = std::sqrt(2.0 * kSqrt3 * beta / (alpha * p.gamma * l));
  p.crack_energy = 2.0 * beta / p.gamma;
  p.cubic_coeff = (6.0 * alpha + 7.0 * alpha_prime - 2.0 * (3.0 * alpha - alpha_prime) * std::cos(6.0 * phi)) *
                  l / (27.0 * kSqrt3);
  return p;
}

}  // namespace cleave
