#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "stokesopt/error.hpp"
#include "stokesopt/gram_metrics.hpp"
#include "stokesopt/optimizer.hpp"
#include "stokesopt/rng.hpp"
#include "stokesopt/sphere.hpp"
#include "support.hpp"

using namespace stokesopt;

namespace {

std::vector<HypersphericalPoint> random_points(int n, std::uint64_t seed) {
  Rng rng = substream(seed, 0);
  std::uniform_real_distribution<double> phi(0.1, 1.47), theta(0.0, 2.0 * std::numbers::pi);
  std::vector<HypersphericalPoint> pts(stokes_dim(n), HypersphericalPoint{RVector(n - 1), RVector(n - 1)});
  for (auto& p : pts)
    for (int i = 0; i < n - 1; ++i) {
      p.phis[i] = phi(rng);
      p.thetas[i] = theta(rng);
    }
  return pts;
}

CMatrix states_of(const std::vector<HypersphericalPoint>& pts) {
  CMatrix s(pts.front().dim(), static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) s.col(static_cast<Eigen::Index>(k)) = hyperspherical_to_jones(pts[k]).amplitudes();
  return s;
}

void expect_monotone(const OptimizerRun& run) {
  for (std::size_t i = 1; i < run.trajectory.size(); ++i)
    EXPECT_LE(run.trajectory[i].xi, run.trajectory[i - 1].xi) << "iteration " << run.trajectory[i].iter;
}

}  // namespace

TEST(Config, Validation) {
  OptimizerConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.backtracking_alpha = 0.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.backtracking_beta = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.max_iters = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  EXPECT_DOUBLE_EQ(cfg.effective_grad_tol(3), 8e-9);
  EXPECT_EQ(algorithm_from_name("hyperspherical"), Algorithm::kHyperspherical);
  EXPECT_EQ(algorithm_from_name(algorithm_name(Algorithm::kProjected)), Algorithm::kProjected);
  EXPECT_THROW(algorithm_from_name("newton"), ConfigError);
}

TEST(GradientJones, MatchesFiniteDifferences) {
  for (int n = 2; n <= 4; ++n) {
    for (std::uint64_t p = 0; p < 4; ++p) {
      const auto set = random_set(n, 500 + p);
      const auto g = gradient_jones(set);
      EXPECT_NEAR(g.xi / static_cast<double>(oracle::xi_oracle(set.states())), 1.0, 1e-10);
      const CMatrix fd = oracle::fd_gradient_jones(set.states());
      EXPECT_LT(oracle::rel_error(g.tangent, fd), 1e-6) << "n=" << n << " p=" << p;
    }
  }
}

TEST(GradientJones, TangentToEachSphere) {
  for (int n = 2; n <= 5; ++n) {
    const auto set = random_set(n, 77);
    const auto g = gradient_jones(set);
    const double scale = std::max(1.0, g.tangent.cwiseAbs().maxCoeff());
    for (int k = 0; k < set.size(); ++k)
      EXPECT_LT(std::abs(set.states().col(k).dot(g.tangent.col(k)).real()), 1e-10 * scale);
  }
}

TEST(GradientJones, StationaryAtOrthonormalTriple) {
  EXPECT_LT(gradient_jones(yang_nolan(2)).tangent.norm(), 1e-8);
}

TEST(GradientJones, DescentDirectionDecreasesXi) {
  const auto set = sic_search(2, 1);
  CMatrix perturbed = set.states();
  perturbed.col(0) += 0.05 * perturbed.col(1);
  sphere::normalize_columns(perturbed);
  const auto g = gradient_jones(perturbed);
  const CMatrix moved = sphere::retract(perturbed, g.tangent, 1e-4);
  EXPECT_LT(oracle::xi_oracle(moved), oracle::xi_oracle(perturbed));
}

TEST(GradientJones, SingularRejected) {
  CMatrix dup = yang_nolan(2).states();
  dup.col(2) = dup.col(1);
  EXPECT_THROW(gradient_jones(dup), SingularSet);
}

TEST(GradientHyperspherical, MatchesFiniteDifferences) {
  for (int n = 2; n <= 4; ++n) {
    for (std::uint64_t p = 0; p < 4; ++p) {
      const auto pts = random_points(n, 900 + p);
      const auto g = gradient_hyperspherical(pts);
      const RMatrix fd = oracle::fd_gradient_angles(pts);
      EXPECT_LT(oracle::rel_error(g.angles, fd), 1e-6) << "n=" << n << " p=" << p;
    }
  }
}

TEST(GradientHyperspherical, ChainRuleAgreesWithJonesForm) {
  for (int n = 2; n <= 4; ++n) {
    const auto pts = random_points(n, 31 + n);
    const auto ga = gradient_hyperspherical(pts);
    const auto gj = gradient_jones(states_of(pts));
    EXPECT_NEAR(ga.xi, gj.xi, 1e-10 * gj.xi);
    RMatrix chained(2 * (n - 1), stokes_dim(n));
    for (int k = 0; k < stokes_dim(n); ++k)
      for (int a = 0; a < 2 * (n - 1); ++a) {
        const AngleIndex which{a < n - 1 ? AngleIndex::Kind::kPhi : AngleIndex::Kind::kTheta, a % (n - 1)};
        chained(a, k) = gj.tangent.col(k).dot(d_jones_d_angle(pts[k], which)).real();
      }
    EXPECT_LT(oracle::rel_error(ga.angles, chained), 1e-10);
  }
}

TEST(GradientHyperspherical, PoleGivesZeroIrrelevantComponents) {
  auto pts = random_points(3, 5);
  pts[0].phis[0] = 0.0;
  const auto g = gradient_hyperspherical(pts);
  ASSERT_TRUE(g.angles.allFinite());
  EXPECT_LT(std::abs(g.angles(1, 0)), 1e-12);  // phi_2
  EXPECT_LT(std::abs(g.angles(2, 0)), 1e-12);  // theta_1
  EXPECT_LT(std::abs(g.angles(3, 0)), 1e-12);  // theta_2
}

TEST(GradientHyperspherical, IdenticalStatesSingular) {
  std::vector<HypersphericalPoint> pts(3, HypersphericalPoint{RVector::Zero(1), RVector::Zero(1)});
  EXPECT_THROW(gradient_hyperspherical(pts), SingularSet);
}

TEST(GradientCheck, LibraryDriverBelowTolerance) {
  for (Algorithm a : {Algorithm::kProjected, Algorithm::kHyperspherical}) {
    const auto r = gradient_check(3, a, 5, 1);
    EXPECT_EQ(r.points, 5);
    EXPECT_LT(r.max_rel_error, 1e-6);
  }
}

TEST(Descend, TwoModesReachZeroPenalty) {
  for (Algorithm a : {Algorithm::kProjected, Algorithm::kHyperspherical}) {
    OptimizerConfig cfg;
    cfg.algorithm = a;
    cfg.max_iters = 20000;
    cfg.trajectory_stride = 1;
    const auto run = descend(random_set(2, 4), cfg);
    EXPECT_LE(to_db(run.final_xi / 3.0), 0.001);
    EXPECT_LE(run.final_xi, run.initial_xi);
    EXPECT_LT(sphere::max_norm_deviation(run.final_set.states()), 1e-10);
    EXPECT_NEAR(cost(run.final_set) / run.final_xi, 1.0, 1e-9);
    expect_monotone(run);
    EXPECT_TRUE(oracle::record_bounds(run.final_set));
  }
}

TEST(Descend, MonotoneThroughBothPhases) {
  for (Algorithm a : {Algorithm::kProjected, Algorithm::kHyperspherical}) {
    OptimizerConfig cfg;
    cfg.algorithm = a;
    cfg.max_iters = 400;
    cfg.trajectory_stride = 1;
    cfg.normalized_phase_threshold = 1.5;  // start in the normalized phase
    const auto run = descend(random_set(3, 8), cfg);
    EXPECT_LT(run.final_xi, run.initial_xi);
    expect_monotone(run);
    EXPECT_EQ(run.trajectory.front().iter, 0);
    EXPECT_EQ(run.trajectory.back().iter, run.iterations_used);
    for (const auto& s : run.trajectory) EXPECT_GE(s.xi, 8.0 - 1e-6);
    EXPECT_TRUE(oracle::record_bounds(run.final_set));
  }
}

TEST(Descend, CanonicalPhaseGauge) {
  OptimizerConfig cfg;
  cfg.max_iters = 50;
  const auto run = descend(random_set(3, 2), cfg);
  const CMatrix& s = run.final_set.states();
  for (int k = 0; k < s.cols(); ++k) {
    Eigen::Index i;
    s.col(k).cwiseAbs().maxCoeff(&i);
    EXPECT_LT(std::abs(s(i, k).imag()), 1e-15);
    EXPECT_GE(s(i, k).real(), 0.0);
  }
}

TEST(Descend, SingularStartRejected) {
  CMatrix dup = yang_nolan(2).states();
  dup.col(2) = dup.col(1);
  EXPECT_THROW(descend(LaunchSet(dup, Family::kCustom), OptimizerConfig{}), SingularSet);
}

TEST(InitialSet, FamiliesArePerturbedAndSeeded) {
  OptimizerConfig cfg;
  cfg.seed = 10;
  const auto a = initial_set(3, cfg, {InitFamily::kYang, {}}, 0);
  const auto b = initial_set(3, cfg, {InitFamily::kYang, {}}, 1);
  EXPECT_GT((a.states() - yang_nolan(3).states()).norm(), 0.0);
  EXPECT_LT((a.states() - yang_nolan(3).states()).norm(), 0.2);
  EXPECT_GT((a.states() - b.states()).norm(), 0.0);
  EXPECT_EQ((initial_set(3, cfg, {InitFamily::kRandom, {}}, 2).states() - random_set(3, 12).states()).norm(), 0.0);
  EXPECT_THROW(initial_set(3, cfg, {InitFamily::kFile, {}}, 0), ConfigError);
  EXPECT_THROW(initial_set(4, cfg, {InitFamily::kMub, {}}, 0), UnsupportedDimension);
}

TEST(MultiStart, SingleStartEqualsDescend) {
  OptimizerConfig cfg;
  cfg.max_iters = 300;
  cfg.seed = 3;
  const auto ms = multi_start(3, cfg, 1, {});
  const auto run = descend(initial_set(3, cfg, {}, 0), cfg);
  EXPECT_EQ(ms.best.final_xi, run.final_xi);
  EXPECT_EQ((ms.best.final_set.states() - run.final_set.states()).norm(), 0.0);
}

TEST(MultiStart, BestIsArgminAndDeterministic) {
  OptimizerConfig cfg;
  cfg.max_iters = 2000;
  cfg.seed = 21;
  const auto a = multi_start(3, cfg, 8, {});
  const auto b = multi_start(3, cfg, 8, {});
  ASSERT_EQ(a.summaries.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_LE(a.best.final_xi, a.summaries[i].final_xi);
    EXPECT_EQ(a.summaries[i].final_xi, b.summaries[i].final_xi);
    EXPECT_EQ(a.summaries[i].iterations_used, b.summaries[i].iterations_used);
    EXPECT_EQ(a.summaries[i].seed, 21 + i);
  }
  EXPECT_EQ(a.best_index, b.best_index);
  EXPECT_TRUE(oracle::record_bounds(a.best.final_set));
  EXPECT_THROW(multi_start(3, cfg, 0, {}), ConfigError);
}
