#include "cleave/reduced.hpp"

#include "../support/oracles.hpp"

#include <gtest/gtest.h>

using namespace cleave;
using cleave::testing::SplitMix;

namespace {

const PotentialFamily kSyn = PotentialFamily::synthetic(4.0, 0.0, 1.0);
const PotentialFamily kSynSoft = PotentialFamily::synthetic(4.0, -20.0, 1.0);
const PotentialFamily kLj = PotentialFamily::lennard_jones(1.0);

}  // namespace

TEST(ReducedEnergy, ZeroUnderCompression) {
  for (double r : {0.0, 0.3, 0.9, 1.0, -0.5, -1.0}) {
    const auto res = reduced_energy_solve(kLj, 0.2, r);
    EXPECT_NEAR(res.value, 0.0, 1e-14) << r;
    EXPECT_NEAR(res.minimizer(0, 0), r, 1e-15);
  }
}

TEST(ReducedEnergy, EvenInR) {
  for (const auto& f : {kSyn, kLj}) {
    for (double r : {1.05, 1.2, 1.6, 3.0}) {
      EXPECT_NEAR(reduced_energy_numeric(f, 0.4, r), reduced_energy_numeric(f, 0.4, -r), 1e-10);
    }
  }
}

TEST(ReducedEnergy, MinimizerHasFixedEntryAndPositiveDeterminant) {
  for (double phi : {0.0, 0.3, 0.7}) {
    for (double r : {1.01, 1.1, 1.5}) {
      const auto res = reduced_energy_solve(kSyn, phi, r);
      EXPECT_DOUBLE_EQ(res.minimizer(0, 0), r);
      EXPECT_GT(res.minimizer.determinant(), 0.0);
      EXPECT_NEAR(w_cell(kSyn, res.minimizer, phi), res.value, 1e-13);
    }
  }
}

TEST(ReducedEnergy, CubicCoefficientExamples) {
  EXPECT_NEAR(reduced_cubic_coefficient(4.0, 0.0, 0.0), 0.0, 1e-15);
  EXPECT_NEAR(reduced_cubic_coefficient(4.0, 0.0, kPi / 6.0), 4.0 / 9.0, 1e-15);
  EXPECT_NEAR(reduced_energy_expansion(4.0, 0.0, kPi / 6.0, 1.1), 0.01 + 4.0 / 9.0 * 1e-3, 1e-15);
  EXPECT_THROW(reduced_energy_expansion(4.0, 0.0, 0.0, 0.9), std::invalid_argument);
}

TEST(ReducedEnergy, MatchesExpansionNearOne) {
  // The remainder after the cubic term scales like (r-1)^4.
  for (const auto& f : {kSyn, kSynSoft, kLj}) {
    for (double phi : {0.0, 0.25, kPi / 6.0}) {
      std::vector<double> ratio;
      for (double s : {0.01, 0.005, 0.0025}) {
        const double num = reduced_energy_numeric(f, phi, 1.0 + s);
        const double exp3 = reduced_energy_expansion(f.alpha(), f.alpha_prime(), phi, 1.0 + s);
        ratio.push_back(std::abs(num - exp3) / std::pow(s, 4));
      }
      EXPECT_LT(ratio.back(), 2.0 * std::max(ratio[0], 1.0)) << f.name() << " phi=" << phi;
      const double s = 0.05;
      const double rel = std::abs(reduced_energy_numeric(f, phi, 1.0 + s) - f.alpha() * s * s / 4.0) /
                         (f.alpha() * s * s / 4.0);
      EXPECT_LT(rel, 0.1 + 40.0 * std::abs(f.alpha_prime()) / f.alpha() * s);
    }
  }
}

TEST(ReducedEnergy, SaturatesAtBeta) {
  // One bond can stay intact under any stretch of the e1 entry.
  const double r = 50.0 * kSyn.tail_radius();
  for (double phi : {0.0, 0.3, 1.0}) EXPECT_NEAR(reduced_energy_numeric(kSyn, phi, r), 1.0, 1e-12);
  EXPECT_NEAR(reduced_energy_numeric(kLj, 0.3, 40.0), 1.0, 2e-3);
}

TEST(ReducedEnergy, NondecreasingForStretch) {
  for (const auto& f : {kSyn, kSynSoft, kLj}) {
    double prev = 0.0;
    for (int k = 0; k <= 200; ++k) {
      const double r = 1.0 + 3.0 * k / 200.0;
      const double w = reduced_energy_numeric(f, 0.2, r);
      EXPECT_GE(w, prev - 1e-11) << f.name() << " r=" << r;
      prev = w;
    }
  }
}

TEST(ReducedEnergy, IsAnInfimum) {
  // Property: every admissible F with F11 = r has W_cell(F) >= the reduced value.
  SplitMix rng(55);
  for (const auto& f : {kSyn, kLj}) {
    for (int k = 0; k < 40; ++k) {
      const double r = rng.uniform(1.0, 2.5);
      const double phi = rng.uniform(0.0, kPi / 3.0);
      const double w = reduced_energy_numeric(f, phi, r);
      for (int j = 0; j < 200; ++j) {
        Mat2 F = Mat2::Identity() + rng.matrix(1.5);
        F(0, 0) = r;
        EXPECT_GE(w_cell(f, F, phi), w - 1e-10);
      }
    }
  }
}

TEST(ConvexMinorantTest, ShapeAndLowerBound) {
  const double phi = 0.2;
  const auto V = convex_minorant(4.0, 0.0, phi, 0.05, 0.1, MinorantVariant::QuadraticCutoff);
  EXPECT_EQ(V(0.5), 0.0);
  EXPECT_EQ(V(1.0), 0.0);
  EXPECT_NEAR(V.right_curvature_at_one(), 4.0 / 2.0 - 2.0 * 0.05, 1e-15);
  double prev_slope = 0.0;
  for (int k = 0; k <= 400; ++k) {
    const double r = 0.5 + 3.0 * k / 400.0;
    EXPECT_LE(V(r), reduced_energy_numeric(kSyn, phi, r) + 1e-12) << r;
    const double fd = (V(r + 1e-7) - V(r - 1e-7)) / 2e-7;
    EXPECT_NEAR(V.slope(r), fd, 1e-6);
    EXPECT_GE(V.slope(r), prev_slope - 1e-14);
    prev_slope = V.slope(r);
  }
  const auto Vc = convex_minorant(4.0, 0.0, kPi / 6.0, 0.0, 0.05, MinorantVariant::CubicRefined, 10.0);
  EXPECT_NEAR(Vc.right_curvature_at_one(), 2.0, 1e-15);
}

TEST(ConvexMinorantTest, RejectsBadParameters) {
  EXPECT_THROW(convex_minorant(4.0, 0.0, 0.0, 1.5, 0.1, MinorantVariant::QuadraticCutoff), std::invalid_argument);
  EXPECT_THROW(convex_minorant(4.0, 0.0, 0.0, 0.1, 0.0, MinorantVariant::QuadraticCutoff), std::invalid_argument);
  // A large quartic constant bends the refined piece downward.
  EXPECT_THROW(convex_minorant(4.0, 0.0, 0.0, 0.0, 1.0, MinorantVariant::CubicRefined, 100.0), std::invalid_argument);
}

TEST(Prediction, GammaAndDirections) {
  EXPECT_NEAR(gamma_of(0.0), std::sqrt(3.0) / 2.0, 1e-15);
  EXPECT_NEAR(gamma_of(kPi / 6.0), 1.0, 1e-15);
  EXPECT_EQ(optimal_directions(0.0).size(), 2u);
  ASSERT_EQ(optimal_directions(0.3).size(), 1u);
  EXPECT_EQ(optimal_directions(0.3)[0], Direction::V2);
  EXPECT_NEAR(p_gamma(1.0), 0.5, 1e-15);
  EXPECT_NEAR(p_gamma(std::sqrt(3.0) / 2.0), 0.0, 1e-15);
  SplitMix rng(5);
  for (int k = 0; k < 200; ++k) {
    const double phi = rng.uniform(0.0, kPi / 3.0);
    double g = 0.0;
    for (const Vec2& v : lattice_vectors(phi)) g = std::max(g, std::abs(v.y()));
    EXPECT_NEAR(gamma_of(phi), g, 1e-14);
    EXPECT_GE(p_gamma(gamma_of(phi)), -1e-12);
    EXPECT_LE(p_gamma(gamma_of(phi)), 0.5 + 1e-12);
  }
}

TEST(Prediction, ClosedFormValues) {
  const auto p = cleavage_prediction(4.0, 0.0, 1.0, 2.0, 0.0);
  EXPECT_NEAR(p.gamma, std::sqrt(3.0) / 2.0, 1e-15);
  EXPECT_NEAR(p.a_crit, std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(p.crack_energy, 4.0 / std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(p.cubic_coeff, 0.0, 1e-15);
  const auto q = cleavage_prediction(4.0, 0.0, 1.0, 2.0, kPi / 6.0);
  EXPECT_NEAR(q.crack_energy, 2.0, 1e-15);
  EXPECT_NEAR(q.v_gamma_vector.y(), 1.0, 1e-15);
  EXPECT_NEAR(q.cubic_coeff, 48.0 * 2.0 / (27.0 * std::sqrt(3.0)), 1e-14);
  EXPECT_NEAR(q.limit_energy(0.1), q.elastic_energy(0.1), 0.0);
  EXPECT_EQ(q.limit_energy(10.0), 2.0);
  EXPECT_THROW(cleavage_prediction(4.0, 0.0, 1.0, 0.5, 0.0), std::invalid_argument);
  EXPECT_THROW(cleavage_prediction(4.0, 0.0, 1.0, 2.0, 1.1), std::invalid_argument);
  EXPECT_THROW(cleavage_prediction(-4.0, 0.0, 1.0, 2.0, 0.0), std::invalid_argument);
}

TEST(Prediction, CriticalLoadBalancesEnergies) {
  SplitMix rng(17);
  for (int k = 0; k < 500; ++k) {
    const auto p = cleavage_prediction(rng.uniform(0.5, 100.0), rng.uniform(-50, 50), rng.uniform(0.1, 5.0),
                                       rng.uniform(0.6, 5.0), rng.uniform(0.0, kPi / 3.0 - 1e-9));
    EXPECT_LE(std::abs(p.elastic_energy(p.a_crit) - p.crack_energy) / p.crack_energy, 1e-12);
  }
}
