#include "cleave/lattice.hpp"
#include "cleave/potential.hpp"

#include "../support/oracles.hpp"

#include <gtest/gtest.h>

using namespace cleave;
using cleave::testing::SplitMix;

namespace {

std::vector<PotentialFamily> families() {
  return {PotentialFamily::synthetic(4.0, 0.0, 1.0), PotentialFamily::synthetic(4.0, -20.0, 1.0),
          PotentialFamily::synthetic(10.0, 15.0, 2.0), PotentialFamily::lennard_jones(1.0),
          PotentialFamily::lennard_jones(0.5)};
}

double fd1(const PotentialFamily& f, double r, double h) { return (f.value(r + h) - f.value(r - h)) / (2 * h); }

}  // namespace

TEST(Potential, ZeroExactlyAtOneAndPositiveElsewhere) {
  for (const auto& f : families()) {
    EXPECT_EQ(f.value(1.0), 0.0) << f.name();
    for (int k = 0; k <= 4000; ++k) {
      const double r = 4.0 * k / 4000.0;
      if (std::abs(r - 1.0) < 1e-12) continue;
      EXPECT_GT(f.value(r), 0.0) << f.name() << " r=" << r;
    }
  }
}

TEST(Potential, CurvatureAtOneIsAlpha) {
  for (const auto& f : families()) {
    const PairDerivs d = f.derivs(1.0);
    EXPECT_NEAR(d.first, 0.0, 1e-14);
    EXPECT_NEAR(d.second, f.alpha(), 1e-12 * f.alpha());
  }
  const auto lj = PotentialFamily::lennard_jones(2.0);
  EXPECT_DOUBLE_EQ(lj.alpha(), 144.0);
  EXPECT_DOUBLE_EQ(lj.alpha_prime(), -3024.0);
}

TEST(Potential, LennardJonesMatchesClosedForm) {
  const auto lj = PotentialFamily::lennard_jones(1.5);
  for (double r : {0.8, 0.95, 1.0, 1.02, 1.3, 2.0, 5.0}) {
    EXPECT_NEAR(lj.value(r), cleave::testing::lj_direct(1.5, r), 1e-13 * (1.0 + lj.value(r)));
  }
  EXPECT_DOUBLE_EQ(lj.value(0.0), 1.5e12);
  EXPECT_DOUBLE_EQ(lj.value(1e-3), 1.5e12);
  EXPECT_NEAR(std::abs(lj.value(lj.tail_radius()) - 1.5), 1.5e-3, 1e-12);
  for (double r = lj.tail_radius(); r < 50.0; r += 0.37) EXPECT_LE(std::abs(lj.value(r) - 1.5), 1.5e-3 * (1 + 1e-12));
}

TEST(Potential, TaylorExpansionAtOne) {
  // |W(1+s) - alpha s^2/2 - alpha' s^3/6| / s^4 stays bounded as s -> 0.
  for (const auto& f : families()) {
    std::vector<double> ratios;
    for (double s : {0.02, 0.01, 0.005, 0.0025}) {
      for (double sg : {1.0, -1.0}) {
        const double t = sg * s;
        const double taylor = f.alpha() * t * t / 2.0 + f.alpha_prime() * t * t * t / 6.0;
        ratios.push_back(std::abs(f.value(1.0 + t) - taylor) / (s * s * s * s));
      }
    }
    const double mx = *std::max_element(ratios.begin(), ratios.end());
    EXPECT_LT(mx, 1e5 * f.beta()) << f.name();
  }
  // The synthetic family is exactly the cubic polynomial near 1 on the stretch side.
  const auto syn = PotentialFamily::synthetic(4.0, -3.0, 1.0);
  for (double s : {0.01, 0.05, 0.1}) {
    EXPECT_NEAR(syn.value(1.0 + s), 2.0 * s * s - 0.5 * s * s * s, 1e-15);
  }
}

TEST(Potential, SyntheticTailIsExactlyBeta) {
  const auto f = PotentialFamily::synthetic(4.0, 0.0, 1.0);
  EXPECT_EQ(f.value(10.0 * f.tail_radius()), 1.0);
  EXPECT_EQ(f.value(f.tail_radius()), 1.0);
  const PairDerivs d = f.derivs(f.tail_radius() * 1.5);
  EXPECT_EQ(d.first, 0.0);
  EXPECT_EQ(d.second, 0.0);
}

TEST(Potential, DerivativesMatchFiniteDifferences) {
  SplitMix rng(3);
  for (const auto& f : families()) {
    for (int k = 0; k < 200; ++k) {
      const double r = rng.uniform(0.85, std::min(3.0, f.tail_radius() * 1.2));
      const double h = 1e-6;
      const PairDerivs d = f.derivs(r);
      const double scale = std::max(1.0, std::abs(d.first));
      EXPECT_NEAR(d.first, fd1(f, r, h), 1e-7 * scale * f.alpha()) << f.name() << " r=" << r;
      const double fd2 = (f.derivs(r + h).first - f.derivs(r - h).first) / (2 * h);
      EXPECT_NEAR(d.second, fd2, 1e-6 * std::max(1.0, std::abs(d.second)) * f.alpha()) << f.name() << " r=" << r;
      double w, dw;
      f.value_and_slope(r, w, dw);
      EXPECT_EQ(w, f.value(r));
      EXPECT_NEAR(dw, d.first, 1e-14 * scale);
    }
  }
}

TEST(Potential, SyntheticBlendIsSmoothAcrossJoints) {
  for (const auto& f : {PotentialFamily::synthetic(4.0, 0.0, 1.0), PotentialFamily::synthetic(4.0, -20.0, 1.0)}) {
    const double s_hi = f.tail_radius() - 1.0;
    for (double joint : {1.0 + 0.5 * s_hi, 1.0 + s_hi}) {
      const double h = 1e-9;
      EXPECT_NEAR(f.value(joint - h), f.value(joint + h), 1e-8);
      EXPECT_NEAR(f.derivs(joint - h).first, f.derivs(joint + h).first, 1e-7);
      EXPECT_NEAR(f.derivs(joint - h).second, f.derivs(joint + h).second, 1e-6);
    }
    // Increasing on (1, tail), decreasing on (0, 1).
    double prev = f.value(1.0);
    for (int k = 1; k <= 1000; ++k) {
      const double w = f.value(1.0 + s_hi * k / 1000.0);
      EXPECT_GE(w, prev);
      prev = w;
    }
    prev = f.value(1.0);
    for (int k = 1; k < 1000; ++k) {
      const double w = f.value(1.0 - k / 1000.0);
      EXPECT_GE(w, prev);
      prev = w;
    }
  }
}

TEST(Potential, InvalidInputsRejected) {
  EXPECT_THROW(PotentialFamily::synthetic(0.0, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(PotentialFamily::synthetic(4.0, 0.0, -1.0), std::invalid_argument);
  EXPECT_THROW(PotentialFamily::synthetic(4.0, std::nan(""), 1.0), std::invalid_argument);
  EXPECT_THROW(PotentialFamily::lennard_jones(0.0), std::invalid_argument);
  const auto f = PotentialFamily::lennard_jones(1.0);
  EXPECT_THROW(w_pair(f, -0.1), std::invalid_argument);
  EXPECT_THROW(w_pair_derivs(f, 0.0), std::invalid_argument);
  EXPECT_EQ(w_pair(f, 1.0), 0.0);
  EXPECT_EQ(w_pair_derivs(f, 1.0).second, f.derivs(1.0).second);
}

TEST(CellEnergy, IdentityAndRotationsAreStressFree) {
  SplitMix rng(8);
  for (const auto& f : families()) {
    EXPECT_NEAR(w_cell(f, Mat2::Identity(), 0.0), 0.0, 1e-28);
    for (int k = 0; k < 20; ++k) {
      EXPECT_NEAR(w_cell(f, rng.rotation(), rng.uniform(0, 1.0)), 0.0, 1e-20);
    }
  }
}

TEST(CellEnergy, FrameIndifference) {
  SplitMix rng(21);
  double worst = 0.0;
  for (const auto& f : families()) {
    for (int k = 0; k < 1000; ++k) {
      const Mat2 F = Mat2::Identity() + rng.matrix(0.4);
      const double phi = rng.uniform(0.0, kPi / 3.0);
      const double w = w_cell(f, F, phi);
      worst = std::max(worst, std::abs(w_cell(f, rng.rotation() * F, phi) - w) / std::max(1.0, w));
    }
  }
  EXPECT_LE(worst, 1e-11);
}

TEST(CellEnergy, LargeDeformationLimits) {
  const auto f = PotentialFamily::synthetic(4.0, 0.0, 1.0);
  const double t = 100.0 * f.tail_radius();
  // All three bonds break under t Id.
  EXPECT_DOUBLE_EQ(w_cell(f, t * Mat2::Identity(), 0.3), 1.5);
  // Shearing along v2 keeps that bond intact: the liminf value beta.
  const double phi = 0.3;
  const Vec2 v2 = lattice_vectors(phi)[1];
  const Vec2 n(-v2.y(), v2.x());
  const Mat2 F = Mat2::Identity() + t * Vec2(1.0, 0.0) * n.transpose();
  EXPECT_NEAR(w_cell(f, F, phi), 1.0, 1e-12);
}

TEST(CellEnergy, GradientMatchesFiniteDifferences) {
  SplitMix rng(4);
  for (const auto& f : families()) {
    for (int k = 0; k < 50; ++k) {
      const Mat2 F = Mat2::Identity() + rng.matrix(0.2);
      const double phi = rng.uniform(0.0, 1.0);
      const Mat2 G = w_cell_gradient(f, F, phi);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          Mat2 P = F, M = F;
          P(i, j) += 1e-6;
          M(i, j) -= 1e-6;
          const double fd = (w_cell(f, P, phi) - w_cell(f, M, phi)) / 2e-6;
          EXPECT_NEAR(G(i, j), fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
  }
}

TEST(QuadraticForm, ClosedFormValues) {
  Mat2 A;
  A << 0.0, 0.7, -0.7, 0.0;
  EXPECT_EQ(quadratic_form(4.0, A), 0.0);
  EXPECT_DOUBLE_EQ(quadratic_form(4.0, Mat2::Identity()), 6.0);
  Mat2 D = Mat2::Zero();
  D(0, 0) = 1.0;
  D(1, 1) = -1.0 / 3.0;
  EXPECT_NEAR(quadratic_form(4.0, D), 2.0, 1e-15);
  SplitMix rng(1);
  for (int k = 0; k < 1000; ++k) {
    const Mat2 G = rng.matrix(1.0);
    EXPECT_GE(quadratic_form(3.0, G), 0.0);
    EXPECT_NEAR(quadratic_form(3.0, G), quadratic_form(3.0, 0.5 * (G + G.transpose())), 1e-13);
  }
}

TEST(QuadraticForm, LinearizesCellEnergy) {
  // |W_cell(Id + G) - Q(G)/2| <= C |G|^3 with C uniform over directions and scales.
  SplitMix rng(12);
  double worst = 0.0;
  for (const auto& f : families()) {
    for (int k = 0; k < 300; ++k) {
      Mat2 G = rng.matrix(1.0);
      G /= G.norm();
      const double phi = rng.uniform(0.0, kPi / 3.0);
      for (double size : {1e-2, 3e-3, 1e-3}) {
        const Mat2 H = size * G;
        const double err = std::abs(w_cell(f, Mat2::Identity() + H, phi) - 0.5 * quadratic_form(f.alpha(), H));
        worst = std::max(worst, err / (size * size * size));
      }
    }
  }
  EXPECT_LT(worst, 1e4);
}

TEST(LatticeIdentity, SumOfSquaredProjections) {
  SplitMix rng(77);
  for (int k = 0; k < 500; ++k) {
    Mat2 H = rng.matrix(2.0);
    H = (0.5 * (H + H.transpose())).eval();
    const double phi = rng.uniform(0.0, kPi / 3.0);
    double lhs = 0.0;
    for (const Vec2& v : lattice_vectors(phi)) {
      const double p = v.dot(H * v);
      lhs += p * p;
    }
    const double rhs = 3.0 / 8.0 * (2.0 * (H * H).trace() + H.trace() * H.trace());
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, rhs));
  }
}

TEST(DistanceO2, ValuesAndSvdOracle) {
  EXPECT_NEAR(dist_O2(Mat2::Identity()), 0.0, 1e-15);
  Mat2 R = Mat2::Identity();
  R(1, 1) = -1.0;
  EXPECT_NEAR(dist_O2(R), 0.0, 1e-15);
  EXPECT_NEAR(dist_O2(2.0 * Mat2::Identity()), std::sqrt(2.0), 1e-15);
  SplitMix rng(2);
  for (int k = 0; k < 1000; ++k) {
    const Mat2 F = rng.matrix(3.0);
    const auto s = cleave::testing::singular_values(F);
    EXPECT_NEAR(dist_O2(F), std::hypot(s[0] - 1.0, s[1] - 1.0), 1e-10);
  }
}

TEST(DistanceO2, QuadraticLowerBound) {
  // c dist^2(F, O(2)) <= W_cell(F) for |F| <= 10: the smallest observed ratio is positive.
  SplitMix rng(31);
  for (const auto& f : families()) {
    double c = 1e300;
    for (int k = 0; k < 100000; ++k) {
      Mat2 F = rng.matrix(7.1);
      if (F.norm() > 10.0) continue;
      const double d = dist_O2(F);
      if (d < 1e-3) continue;
      c = std::min(c, w_cell(f, F, rng.uniform(0.0, 1.0)) / (d * d));
    }
    EXPECT_GT(c, 0.0) << f.name();
    RecordProperty("c_" + f.name() + "_" + std::to_string(static_cast<int>(f.alpha())), std::to_string(c));
  }
}

TEST(ChiPenalty, SupportAndValues) {
  const ChiPenalty chi = ChiPenalty::defaults(1.0);
  EXPECT_DOUBLE_EQ(chi.kappa, 10.0);
  SplitMix rng(6);
  for (int k = 0; k < 100; ++k) {
    EXPECT_EQ(chi.value(rng.rotation()), 0.0);
    EXPECT_EQ(chi.value(rng.rotation() * (Mat2::Identity() + rng.matrix(0.1))), 0.0);
  }
  Mat2 R = Mat2::Identity();
  R(1, 1) = -1.0;
  EXPECT_DOUBLE_EQ(chi.value(R), 10.0);
  EXPECT_EQ(chi.value(R * 12.0), 0.0);
  EXPECT_EQ(chi.value(R * 7.0), 10.0);
  EXPECT_DOUBLE_EQ(w_cell(PotentialFamily::synthetic(4, 0, 1), R, 0.0, chi), 10.0);
  ChiPenalty bad = chi;
  bad.kappa = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = chi;
  bad.r_chi = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(ChiPenalty, GradientMatchesFiniteDifferences) {
  const ChiPenalty chi = ChiPenalty::defaults(1.0);
  SplitMix rng(9);
  int checked = 0;
  for (int k = 0; k < 400; ++k) {
    Mat2 F = rng.matrix(1.0);
    if (k % 2) F *= 10.2 / std::max(F.norm(), 1e-3);  // norm transition
    const Mat2 G = chi.gradient(F);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        Mat2 P = F, M = F;
        P(i, j) += 1e-7;
        M(i, j) -= 1e-7;
        const double fd = (chi.value(P) - chi.value(M)) / 2e-7;
        EXPECT_NEAR(G(i, j), fd, 1e-5 * std::max(1.0, std::abs(fd)));
        checked += fd != 0.0;
      }
  }
  EXPECT_GT(checked, 100);
}

TEST(Threshold, HalfBetaCrossing) {
  for (const auto& f : families()) {
    const double R = r_threshold_half_beta(f);
    EXPECT_GT(R, 1.0);
    EXPECT_NEAR(f.value(R), 0.5 * f.beta(), 1e-12 * f.beta());
    for (double r = R; r < 10.0 * f.tail_radius(); r += 0.01) EXPECT_GE(f.value(r), 0.5 * f.beta() * (1 - 1e-12));
  }
}
