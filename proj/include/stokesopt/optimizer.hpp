#pragma once

// Gradient descent on xi = Tr(G^-1) over feasible launch sets, in two
// parameterizations: hyperspherical angles (unconstrained) and Cartesian
// Jones vectors projected onto the product of unit spheres.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stokesopt/stokes_core.hpp"
#include "stokesopt/vector_sets.hpp"

namespace stokesopt {

enum class Algorithm { kHyperspherical, kProjected };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::kProjected;
  int max_iters = 100000;
  // Euclidean norm of the tangent gradient; non-positive means 1e-9 (N^2 - 1).
  double grad_tol = 0.0;
  // Normalized-gradient phase runs while xi > threshold * (N^2 - 1).
  double normalized_phase_threshold = 10.0;
  // Phase-1 step is this times sqrt(number of real parameters).
  double normalized_phase_step = 0.01;
  double backtracking_alpha = 0.3;
  double backtracking_beta = 0.5;
  double initial_step = 1.0;
  std::uint64_t seed = 1;
  // Trajectory keeps every `trajectory_stride`-th iteration plus the last.
  int trajectory_stride = 100;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  double effective_grad_tol(int n) const;
};

struct TrajectorySample {
  int iter = 0;
  double xi = 0.0;
  double grad_norm = 0.0;
};

enum class StopReason { kConverged, kMaxIters, kLineSearchStall, kAborted };
std::string stop_reason_name(StopReason r);

struct OptimizerRun {
  LaunchSet final_set;
  std::vector<TrajectorySample> trajectory;
  int iterations_used = 0;
  bool converged = false;
  StopReason stop_reason = StopReason::kMaxIters;
  double initial_xi = 0.0;
  double final_xi = 0.0;
  double final_grad_norm = 0.0;
};

struct XiGradient {
  double xi = 0.0;
  // Column k is the tangent Jones-space gradient of state k:
  // d(xi) = sum_k Re<g_k|ds_k> for every feasible perturbation.
  CMatrix tangent;
};

/// xi and its tangent gradient, from G^-2 and the Jones overlaps. Throws
/// SingularSet.
XiGradient gradient_jones(const LaunchSet& set);
XiGradient gradient_jones(const CMatrix& states);

/// Angle gradient for states given by hyperspherical points: a
/// (2N - 2) x (N^2 - 1) matrix whose column k holds d(xi)/d(phi_1..phi_{N-1})
/// followed by d(xi)/d(theta_1..theta_{N-1}) for state k. Throws SingularSet.
struct AngleGradient {
  double xi = 0.0;
  RMatrix angles;
};
AngleGradient gradient_hyperspherical(const std::vector<HypersphericalPoint>& points);

/// Central finite differences of xi against both analytic gradient forms at
/// `points` random nonsingular sets (Cartesian: normalized perturbations of
/// every real and imaginary amplitude; hyperspherical: every angle), using a
/// fourth-order stencil with step `step` times the smallest singular value
/// of S. Each point's error is max |fd - analytic| / max |analytic|.
struct GradCheckResult {
  int points = 0;
  double max_rel_error = 0.0;
};
GradCheckResult gradient_check(int n, Algorithm algorithm, int points, std::uint64_t seed, double step = 1e-3);

/// One descent run. The returned set is in the canonical phase gauge.
/// Throws SingularSet when `initial` is singular.
OptimizerRun descend(const LaunchSet& initial, const OptimizerConfig& cfg);

enum class InitFamily { kRandom, kSic, kMub, kYang, kFile };
std::string init_family_name(InitFamily f);

struct InitSpec {
  InitFamily family = InitFamily::kRandom;
  // Used by kFile.
  std::optional<LaunchSet> file_set;
};

/// Initial set for start `index`: random sets use seed cfg.seed + index;
/// deterministic families are perturbed by complex-Gaussian noise of scale
/// kInitPerturbation (seed cfg.seed + index) and renormalized. Unperturbed
/// MUB sets are exact stationary points of xi.
LaunchSet initial_set(int n, const OptimizerConfig& cfg, const InitSpec& init, int index);
inline constexpr double kInitPerturbation = 1e-2;

struct StartSummary {
  int index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double initial_xi = 0.0;
  double final_xi = 0.0;
  double final_penalty_db = 0.0;
  int iterations_used = 0;
  bool converged = false;
  StopReason stop_reason = StopReason::kMaxIters;
};

struct MultiStartResult {
  OptimizerRun best;
  int best_index = 0;
  std::vector<StartSummary> summaries;
};

/// Independent starts across OpenMP threads; returns the lowest final xi
/// (ties to the lower start index). Throws SearchFailed when every start
/// fails.
MultiStartResult multi_start(int n, const OptimizerConfig& cfg, int num_starts, const InitSpec& init);

}  // namespace stokesopt
