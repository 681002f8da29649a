#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "stokesopt/error.hpp"
#include "stokesopt/rng.hpp"
#include "stokesopt/stokes_core.hpp"
#include "support.hpp"

using namespace stokesopt;

namespace {

CMatrix random_complex(int n, Rng& rng) {
  CMatrix m(n, n);
  for (int j = 0; j < n; ++j) m.col(j) = complex_gaussian(n, rng);
  return m;
}

}  // namespace

TEST(GellMann, RejectsDimensionBelowTwo) {
  EXPECT_THROW(gell_mann_basis(1), InvalidDimension);
  EXPECT_THROW(gell_mann_basis(0), InvalidDimension);
}

TEST(GellMann, PauliForTwoModes) {
  const auto b = gell_mann_basis(2);
  ASSERT_EQ(b.size(), 3);
  CMatrix s1(2, 2), s2(2, 2), s3(2, 2);
  s1 << 0, 1, 1, 0;
  s2 << 0, cplx(0, -1), cplx(0, 1), 0;
  s3 << 1, 0, 0, -1;
  EXPECT_LT((b.matrix(0) - s1).norm(), 1e-15);
  EXPECT_LT((b.matrix(1) - s2).norm(), 1e-15);
  EXPECT_LT((b.matrix(2) - s3).norm(), 1e-15);
}

TEST(GellMann, OrthonormalTracelessHermitian) {
  for (int n = 2; n <= 8; ++n) {
    const auto b = gell_mann_basis(n);
    ASSERT_EQ(b.size(), n * n - 1);
    for (int i = 0; i < b.size(); ++i) {
      EXPECT_LT(std::abs(b.matrix(i).trace()), 1e-12);
      EXPECT_LT((b.matrix(i) - b.matrix(i).adjoint()).norm(), 1e-12);
      for (int j = 0; j < b.size(); ++j) {
        const double expected = i == j ? 2.0 : 0.0;
        EXPECT_LT(std::abs((b.matrix(i) * b.matrix(j)).trace() - expected), 1e-12) << n << " " << i << " " << j;
      }
    }
  }
}

TEST(GellMann, FrozenOrdering) {
  const auto b = gell_mann_basis(3);
  EXPECT_EQ(b.generator(0).kind, GellMannBasis::Kind::kSymmetric);
  EXPECT_EQ(b.generator(0).j, 0);
  EXPECT_EQ(b.generator(0).k, 1);
  EXPECT_EQ(b.generator(2).j, 1);
  EXPECT_EQ(b.generator(2).k, 2);
  EXPECT_EQ(b.generator(3).kind, GellMannBasis::Kind::kAntisymmetric);
  EXPECT_EQ(b.generator(6).kind, GellMannBasis::Kind::kDiagonal);
  EXPECT_EQ(b.generator(7).kind, GellMannBasis::Kind::kDiagonal);
  const auto again = gell_mann_basis(3);
  for (int i = 0; i < 8; ++i) EXPECT_EQ((b.matrix(i) - again.matrix(i)).norm(), 0.0);
}

TEST(StokesConstant, Values) {
  EXPECT_NEAR(stokes_constant(2), 1.0, 1e-15);
  EXPECT_NEAR(stokes_constant(3), std::sqrt(0.75), 1e-15);
  EXPECT_EQ(stokes_dim(4), 15);
}

TEST(JonesState, NormInvariant) {
  CVector v(2);
  v << 1.0, 1.0;
  EXPECT_THROW(JonesState{v}, InvalidDimension);
  EXPECT_NEAR(JonesState::normalized(v).amplitudes().norm(), 1.0, 1e-15);
  CVector one(1);
  one << 1.0;
  EXPECT_THROW(JonesState{one}, InvalidDimension);
}

TEST(JonesToStokes, ExamplesForTwoModes) {
  const auto b = gell_mann_basis(2);
  const auto s = jones_to_stokes(JonesState::basis(2, 0), b);
  EXPECT_NEAR(s[0], 0.0, 1e-15);
  EXPECT_NEAR(s[1], 0.0, 1e-15);
  EXPECT_NEAR(s[2], 1.0, 1e-15);
  // Poincare-sphere parameterization maps to the expected Cartesian point.
  const double theta = 1.1, phi = 0.7;
  const auto p = jones_to_stokes(JonesState(oracle::jones_from_poincare(theta, phi)), b);
  EXPECT_NEAR(p[0], std::sin(theta) * std::cos(phi), 1e-14);
  EXPECT_NEAR(p[1], std::sin(theta) * std::sin(phi), 1e-14);
  EXPECT_NEAR(p[2], std::cos(theta), 1e-14);
}

TEST(JonesToStokes, UnitNormForRandomStates) {
  Rng rng = substream(11, 0);
  for (int n = 2; n <= 8; ++n) {
    const auto b = gell_mann_basis(n);
    for (int t = 0; t < 50; ++t) {
      const auto s = random_jones(n, rng);
      const auto v = jones_to_stokes(s, b);
      EXPECT_NEAR(v.norm(), 1.0, 1e-10);
      EXPECT_LT((v.components() - stokes_components(s.amplitudes())).norm(), 1e-12);
    }
  }
  EXPECT_NEAR(jones_to_stokes(JonesState::basis(4, 0), gell_mann_basis(4)).norm(), 1.0, 1e-12);
}

TEST(JonesToStokes, DimensionMismatch) {
  EXPECT_THROW(jones_to_stokes(JonesState::basis(3, 0), gell_mann_basis(2)), InvalidDimension);
}

TEST(StokesDot, IdentityOverRandomPairs) {
  Rng rng = substream(12, 0);
  for (int n = 2; n <= 8; ++n) {
    const auto b = gell_mann_basis(n);
    for (int t = 0; t < 1000; ++t) {
      const auto a = random_jones(n, rng);
      const auto c = random_jones(n, rng);
      const double direct = jones_to_stokes(a, b).dot(jones_to_stokes(c, b));
      EXPECT_NEAR(stokes_dot_from_jones(a, c), direct, 1e-12);
    }
  }
}

TEST(StokesDot, SelfAndOrthogonal) {
  Rng rng = substream(13, 0);
  const auto a = random_jones(5, rng);
  EXPECT_NEAR(stokes_dot_from_jones(a, a), 1.0, 1e-14);
  for (int n = 2; n <= 6; ++n)
    EXPECT_NEAR(stokes_dot_from_jones(JonesState::basis(n, 0), JonesState::basis(n, 1)), -1.0 / (n - 1), 1e-14);
  EXPECT_NEAR(stokes_dot_from_jones(JonesState::basis(3, 0), JonesState::basis(3, 2)), -0.5, 1e-14);
}

TEST(StokesImages, OrthonormalBasisSumsToZero) {
  Rng rng = substream(14, 0);
  for (int n = 2; n <= 8; ++n) {
    const CMatrix u = haar_unitary(n, rng);
    RVector sum = RVector::Zero(stokes_dim(n));
    for (int k = 0; k < n; ++k) sum += stokes_components(u.col(k));
    EXPECT_LT(sum.norm(), 1e-10);
  }
}

TEST(Projection, ProjectorIdentities) {
  const auto b2 = gell_mann_basis(2);
  CMatrix d(2, 2);
  d << 1, 0, 0, 0;
  EXPECT_LT((projection_operator(JonesState::basis(2, 0), b2) - d).norm(), 1e-14);
  Rng rng = substream(15, 0);
  for (int n = 2; n <= 6; ++n) {
    const auto b = gell_mann_basis(n);
    const auto s = random_jones(n, rng);
    const CMatrix p = projection_operator(s, b);
    EXPECT_NEAR(std::abs(p.trace() - 1.0), 0.0, 1e-12);
    EXPECT_LT((p * p - p).norm(), 1e-12);
    EXPECT_LT((p - p.adjoint()).norm(), 1e-12);
    EXPECT_LT((p - s.amplitudes() * s.amplitudes().adjoint()).norm(), 1e-12);
  }
}

TEST(Expansion, Examples) {
  const auto b = gell_mann_basis(3);
  const auto e = expand_matrix(CMatrix::Identity(3, 3), b);
  EXPECT_LT(std::abs(e.scalar_part - 1.0), 1e-15);
  EXPECT_LT(e.vector_part.norm(), 1e-15);
  const auto e1 = expand_matrix(b.matrix(0) / (2.0 * stokes_constant(3)), b);
  EXPECT_LT(std::abs(e1.scalar_part), 1e-15);
  EXPECT_NEAR(e1.vector_part[0].real(), 1.0, 1e-14);
  EXPECT_LT(e1.vector_part.tail(7).norm(), 1e-14);
}

TEST(Expansion, RoundTripGeneralAndHermitian) {
  Rng rng = substream(16, 0);
  for (int n = 2; n <= 6; ++n) {
    const auto b = gell_mann_basis(n);
    const CMatrix m = random_complex(n, rng);
    const CMatrix h = m + m.adjoint();
    EXPECT_LT((assemble(expand_matrix(m, b), b) - m).cwiseAbs().maxCoeff(), 1e-12);
    const auto eh = expand_matrix(h, b);
    EXPECT_LT((assemble(eh, b) - h).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(eh.vector_part.imag().norm(), 1e-12);
  }
  EXPECT_THROW(expand_matrix(CMatrix::Identity(2, 2), gell_mann_basis(3)), InvalidDimension);
}

TEST(Hyperspherical, Examples) {
  HypersphericalPoint zero{RVector::Zero(3), RVector::Zero(3)};
  const auto s = hyperspherical_to_jones(zero);
  EXPECT_NEAR(std::abs(s[0] - 1.0), 0.0, 1e-15);
  EXPECT_LT(s.amplitudes().tail(3).norm(), 1e-15);
  HypersphericalPoint p{RVector::Constant(1, std::numbers::pi / 2), RVector::Zero(1)};
  const auto q = hyperspherical_to_jones(p);
  EXPECT_LT(std::abs(q[0]), 1e-15);
  EXPECT_NEAR(std::abs(q[1] - 1.0), 0.0, 1e-15);
}

TEST(Hyperspherical, UnitForArbitraryAngles) {
  Rng rng = substream(17, 0);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int n = 2; n <= 7; ++n) {
    for (int t = 0; t < 20; ++t) {
      HypersphericalPoint p{RVector(n - 1), RVector(n - 1)};
      for (int i = 0; i < n - 1; ++i) {
        p.phis[i] = u(rng);
        p.thetas[i] = u(rng);
      }
      EXPECT_NEAR(hyperspherical_to_jones(p).amplitudes().norm(), 1.0, 1e-12);
    }
  }
}

TEST(Hyperspherical, DerivativeMatchesFiniteDifference) {
  Rng rng = substream(18, 0);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  const int n = 3;
  HypersphericalPoint p{RVector(n - 1), RVector(n - 1)};
  for (int i = 0; i < n - 1; ++i) {
    p.phis[i] = u(rng);
    p.thetas[i] = u(rng);
  }
  const double h = 1e-6;
  for (int a = 0; a < 2 * (n - 1); ++a) {
    const AngleIndex which{a < n - 1 ? AngleIndex::Kind::kPhi : AngleIndex::Kind::kTheta, a % (n - 1)};
    auto shifted = [&](double t) {
      HypersphericalPoint q = p;
      (which.kind == AngleIndex::Kind::kPhi ? q.phis : q.thetas)[which.index] += t;
      return hyperspherical_to_jones(q).amplitudes();
    };
    const CVector fd = (shifted(h) - shifted(-h)) / (2.0 * h);
    const CVector exact = d_jones_d_angle(p, which);
    EXPECT_LT(oracle::rel_error(fd, exact), 1e-6) << a;
  }
}

TEST(Hyperspherical, InverseUpToGlobalPhase) {
  Rng rng = substream(19, 0);
  for (int n = 2; n <= 6; ++n) {
    const auto s = random_jones(n, rng);
    const auto back = hyperspherical_to_jones(jones_to_hyperspherical(s));
    EXPECT_NEAR(std::abs(back.amplitudes().dot(s.amplitudes())), 1.0, 1e-12);
  }
}
