#include "cleave/potential.hpp"

#include "cleave/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cleave {

namespace {

constexpr double kLjCap = 1e12;

// C^4 smoothstep on [0,1]: 126t^5 - 420t^6 + 540t^7 - 315t^8 + 70t^9 and its first two derivatives.
void smoothstep9(double t, double& s, double& ds, double& dds) {
  if (t <= 0.0) {
    s = ds = dds = 0.0;
    return;
  }
  if (t >= 1.0) {
    s = 1.0;
    ds = dds = 0.0;
    return;
  }
  const double t2 = t * t;
  const double t4 = t2 * t2;
  s = t4 * t * (126.0 + t * (-420.0 + t * (540.0 + t * (-315.0 + t * 70.0))));
  ds = t4 * (630.0 + t * (-2520.0 + t * (3780.0 + t * (-2520.0 + t * 630.0))));
  dds = t2 * t * (2520.0 + t * (-12600.0 + t * (22680.0 + t * (-17640.0 + t * 5040.0))));
}

// C^1 smoothstep 3t^2 - 2t^3.
double step3(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}
double step3_slope(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return 6.0 * t * (1.0 - t);
}

}  // namespace

PotentialFamily PotentialFamily::lennard_jones(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("potential.beta: must be positive");
  }
  PotentialFamily f;
  f.kind_ = Kind::LennardJones;
  f.beta_ = beta;
  f.alpha_ = 72.0 * beta;
  f.alpha_prime_ = -1512.0 * beta;
  // (1 - r^-6)^2 >= 1 - 1e-3  <=>  r^-6 <= 1 - sqrt(0.999).
  f.tail_radius_ = std::pow(1.0 - std::sqrt(0.999), -1.0 / 6.0);
  // (r^-6 - 1)^2 = cap  <=>  r^-6 = 1 + sqrt(cap).
  f.r_cap_ = std::pow(1.0 + std::sqrt(kLjCap), -1.0 / 6.0);
  return f;
}

PotentialFamily PotentialFamily::synthetic(double alpha, double alpha_prime, double beta) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("potential.alpha: must be positive");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("potential.beta: must be positive");
  }
  if (!std::isfinite(alpha_prime)) {
    throw std::invalid_argument("potential.alpha_prime: must be finite");
  }
  PotentialFamily f;
  f.kind_ = Kind::Synthetic;
  f.alpha_ = alpha;
  f.alpha_prime_ = alpha_prime;
  f.beta_ = beta;

  // The Taylor core T(s) must be increasing and <= beta on the blend window.
  auto taylor = [&](double s) { return s * s * (alpha / 2.0 + alpha_prime * s / 6.0); };
  double s_top = 1e300;
  if (alpha_prime < 0.0) s_top = -2.0 * alpha / alpha_prime;  // T'(s_top) = 0
  double s_hi;
  if (s_top < 1e300 && taylor(s_top) < beta) {
    s_hi = s_top;
  } else {
    double lo = 0.0, hi = std::min(s_top, std::sqrt(2.0 * beta / alpha) * 4.0 + 1.0);
    while (taylor(hi) < beta) hi *= 2.0;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (taylor(mid) < beta ? lo : hi) = mid;
    }
    s_hi = lo;
  }
  f.blend_hi_ = s_hi;
  f.blend_lo_ = 0.5 * s_hi;
  f.tail_radius_ = 1.0 + s_hi;

  // Compression side: T(s) + c6 s^6 keeps W > 0 on [0, 1).
  f.c6_ = std::max(0.0, alpha_prime / 6.0);
  for (int k = 1; k <= 1000; ++k) {
    const double s = -static_cast<double>(k) / 1000.0;
    if (!(f.value(1.0 + s) > 0.0)) {
      throw std::invalid_argument(
          "potential.alpha_prime: synthetic family not positive under compression "
          "(alpha_prime too large relative to alpha)");
    }
  }
  return f;
}

std::string PotentialFamily::name() const {
  return kind_ == Kind::LennardJones ? "lennard_jones" : "synthetic";
}

void PotentialFamily::value_and_slope(double r, double& w, double& dw) const {
  if (kind_ == Kind::LennardJones) {
    if (r <= r_cap_) {
      w = kLjCap * beta_;
      dw = 0.0;
      return;
    }
    const double r2 = r * r;
    const double u = 1.0 / (r2 * r2 * r2);
    w = beta_ * (u - 1.0) * (u - 1.0);
    dw = beta_ * 2.0 * (u - 1.0) * (-6.0 * u / r);
    return;
  }
  const double s = r - 1.0;
  if (s <= 0.0) {
    const double s2 = s * s;
    w = s2 * (alpha_ / 2.0 + alpha_prime_ * s / 6.0) + c6_ * s2 * s2 * s2;
    dw = s * (alpha_ + alpha_prime_ * s / 2.0) + 6.0 * c6_ * s2 * s2 * s;
    return;
  }
  if (s >= blend_hi_) {
    w = beta_;
    dw = 0.0;
    return;
  }
  const double t = s * s * (alpha_ / 2.0 + alpha_prime_ * s / 6.0);
  const double dt = s * (alpha_ + alpha_prime_ * s / 2.0);
  if (s <= blend_lo_) {
    w = t;
    dw = dt;
    return;
  }
  const double width = blend_hi_ - blend_lo_;
  double sg, dsg, ddsg;
  smoothstep9((s - blend_lo_) / width, sg, dsg, ddsg);
  dsg /= width;
  w = (1.0 - sg) * t + sg * beta_;
  dw = (1.0 - sg) * dt + dsg * (beta_ - t);
}

double PotentialFamily::value(double r) const {
  double w, dw;
  value_and_slope(r, w, dw);
  return w;
}

PairDerivs PotentialFamily::derivs(double r) const {
  PairDerivs d;
  if (kind_ == Kind::LennardJones) {
    if (r <= r_cap_) return d;
    const double r2 = r * r;
    const double u = 1.0 / (r2 * r2 * r2);
    const double du = -6.0 * u / r;
    const double ddu = 42.0 * u / r2;
    d.first = 2.0 * beta_ * (u - 1.0) * du;
    d.second = 2.0 * beta_ * (du * du + (u - 1.0) * ddu);
    return d;
  }
  const double s = r - 1.0;
  if (s <= 0.0) {
    const double s2 = s * s;
    d.first = s * (alpha_ + alpha_prime_ * s / 2.0) + 6.0 * c6_ * s2 * s2 * s;
    d.second = alpha_ + alpha_prime_ * s + 30.0 * c6_ * s2 * s2;
    return d;
  }
  if (s >= blend_hi_) return d;
  const double t = s * s * (alpha_ / 2.0 + alpha_prime_ * s / 6.0);
  const double dt = s * (alpha_ + alpha_prime_ * s / 2.0);
  const double ddt = alpha_ + alpha_prime_ * s;
  if (s <= blend_lo_) {
    d.first = dt;
    d.second = ddt;
    return d;
  }
  const double width = blend_hi_ - blend_lo_;
  double sg, dsg, ddsg;
  smoothstep9((s - blend_lo_) / width, sg, dsg, ddsg);
  dsg /= width;
  ddsg /= width * width;
  d.first = (1.0 - sg) * dt + dsg * (beta_ - t);
  d.second = (1.0 - sg) * ddt - 2.0 * dsg * dt + ddsg * (beta_ - t);
  return d;
}

double w_pair(const PotentialFamily& fam, double r) {
  if (!(r >= 0.0)) throw std::invalid_argument("w_pair: negative bond-length ratio");
  return fam.value(r);
}

PairDerivs w_pair_derivs(const PotentialFamily& fam, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("w_pair_derivs: bond-length ratio must be positive");
  return fam.derivs(r);
}

void ChiPenalty::validate() const {
  if (!(kappa > 0.0)) throw std::invalid_argument("chi.kappa: must be positive");
  if (!(r_chi > std::sqrt(2.0))) throw std::invalid_argument("chi.r_chi: must exceed |Id| = sqrt(2)");
  if (!(smoothing_width > 0.0)) throw std::invalid_argument("chi.smoothing_width: must be positive");
  if (!(det_width > 0.0 && det_width < 1.0)) {
    throw std::invalid_argument("chi.det_width: must lie in (0, 1)");
  }
}

double ChiPenalty::value(const Mat2& F) const {
  const double det = F.determinant();
  const double norm = F.norm();
  const double s_det = 1.0 - step3(det / det_width);
  const double s_norm = 1.0 - step3((norm - r_chi) / smoothing_width);
  return kappa * s_det * s_norm;
}

Mat2 ChiPenalty::gradient(const Mat2& F) const {
  const double det = F.determinant();
  const double norm = F.norm();
  const double s_det = 1.0 - step3(det / det_width);
  const double s_norm = 1.0 - step3((norm - r_chi) / smoothing_width);
  if (s_det == 0.0 || s_norm == 0.0) return Mat2::Zero();
  const double ds_det = -step3_slope(det / det_width) / det_width;
  const double ds_norm = -step3_slope((norm - r_chi) / smoothing_width) / smoothing_width;
  Mat2 cof;
  cof << F(1, 1), -F(1, 0), -F(0, 1), F(0, 0);
  Mat2 g = kappa * ds_det * s_norm * cof;
  if (ds_norm != 0.0 && norm > 0.0) g += kappa * s_det * ds_norm * F / norm;
  return g;
}

double w_cell(const PotentialFamily& fam, const Mat2& F, double phi,
              const std::optional<ChiPenalty>& chi) {
  double sum = 0.0;
  for (const Vec2& v : lattice_vectors(phi)) sum += fam.value((F * v).norm());
  double e = 0.5 * sum;
  if (chi) e += chi->value(F);
  return e;
}

Mat2 w_cell_gradient(const PotentialFamily& fam, const Mat2& F, double phi) {
  Mat2 g = Mat2::Zero();
  for (const Vec2& v : lattice_vectors(phi)) {
    const Vec2 fv = F * v;
    const double rho = fv.norm();
    if (rho == 0.0) continue;
    double w, dw;
    fam.value_and_slope(rho, w, dw);
    g += 0.5 * dw / rho * fv * v.transpose();
  }
  return g;
}

double quadratic_form(double alpha, const Mat2& G) {
  const double g11 = G(0, 0);
  const double g22 = G(1, 1);
  const double off = 0.5 * (G(0, 1) + G(1, 0));
  return 3.0 * alpha / 16.0 * (3.0 * g11 * g11 + 3.0 * g22 * g22 + 2.0 * g11 * g22 + 4.0 * off * off);
}

double dist_O2(const Mat2& F) {
  const double a = F(0, 0), b = F(0, 1), c = F(1, 0), d = F(1, 1);
  const double p = std::hypot(a + d, b - c);
  const double q = std::hypot(a - d, b + c);
  const double s1 = 0.5 * (p + q);
  const double s2 = 0.5 * std::abs(p - q);
  return std::hypot(s1 - 1.0, s2 - 1.0);
}

double r_threshold_half_beta(const PotentialFamily& fam) {
  const double half = 0.5 * fam.beta();
  // W is increasing on (1, tail) for both families; bisect W(R) = beta/2.
  double lo = 1.0, hi = 1.0 + 1e-3;
  while (fam.value(hi) < half) {
    hi = 1.0 + 2.0 * (hi - 1.0);
    if (hi > 1e6) throw std::runtime_error("r_threshold_half_beta: W never reaches beta/2");
  }
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (fam.value(mid) < half ? lo : hi) = mid;
  }
  const double R = hi;
  const double r_max = 10.0 * fam.tail_radius();
  for (int k = 0; k <= 10000; ++k) {
    const double r = R + (r_max - R) * k / 10000.0;
    if (fam.value(r) < half * (1.0 - 1e-12)) {
      throw std::runtime_error("r_threshold_half_beta: W dips below beta/2 beyond the crossing");
    }
  }
  return R;
}

}  // namespace cleave
