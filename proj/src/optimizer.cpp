#include "stokesopt/optimizer.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "stokesopt/error.hpp"
#include "stokesopt/gram_metrics.hpp"
#include "stokesopt/kernels.hpp"
#include "stokesopt/rng.hpp"
#include "stokesopt/sphere.hpp"

namespace stokesopt {

std::string algorithm_name(Algorithm a) {
  return a == Algorithm::kHyperspherical ? "hyperspherical" : "projected";
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "hyperspherical") return Algorithm::kHyperspherical;
  if (name == "projected") return Algorithm::kProjected;
  throw ConfigError("algorithm must be 'hyperspherical' or 'projected', got '" + name + "'");
}

std::string stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::kConverged:
      return "converged";
    case StopReason::kMaxIters:
      return "max-iters";
    case StopReason::kLineSearchStall:
      return "line-search-stall";
    case StopReason::kAborted:
      return "aborted";
  }
  return "unknown";
}

std::string init_family_name(InitFamily f) {
  switch (f) {
    case InitFamily::kRandom:
      return "random";
    case InitFamily::kSic:
      return "sic";
    case InitFamily::kMub:
      return "mub";
    case InitFamily::kYang:
      return "yang";
    case InitFamily::kFile:
      return "file";
  }
  return "unknown";
}

void OptimizerConfig::validate() const {
  if (!(backtracking_alpha > 0.0 && backtracking_alpha < 0.5)) {
    throw ConfigError("backtracking_alpha must lie in (0, 0.5)");
  }
  if (!(backtracking_beta > 0.0 && backtracking_beta < 1.0)) {
    throw ConfigError("backtracking_beta must lie in (0, 1)");
  }
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(initial_step > 0.0)) throw ConfigError("initial_step must be positive");
  if (!(normalized_phase_step > 0.0)) throw ConfigError("normalized_phase_step must be positive");
  if (!(normalized_phase_threshold > 0.0)) {
    throw ConfigError("normalized_phase_threshold must be positive");
  }
  if (trajectory_stride < 1) throw ConfigError("trajectory_stride must be >= 1");
}

double OptimizerConfig::effective_grad_tol(int n) const {
  return grad_tol > 0.0 ? grad_tol : 1e-9 * stokes_dim(n);
}

namespace {

// xi and G^-1 of a set of columns, or nullopt when the Gram matrix is not
// safely positive definite. xi bounds the condition number from both sides
// (xi / M <= cond(G) <= M xi), so it doubles as the singularity guard.
struct XiValue {
  double xi;
  RMatrix g_inv;
};

std::optional<XiValue> evaluate_xi(const CMatrix& states) {
  const RMatrix g = kernels::stokes_gram(states);
  Eigen::LLT<RMatrix> llt(g);
  if (llt.info() != Eigen::Success) return std::nullopt;
  RMatrix g_inv = llt.solve(RMatrix::Identity(g.rows(), g.cols()));
  const double xi = g_inv.trace();
  if (!std::isfinite(xi) || !(xi > 0.0) || xi > kSingularGramCondition) return std::nullopt;
  return XiValue{xi, std::move(g_inv)};
}

// Unprojected Jones-space gradient from a cached G^-1.
CMatrix full_gradient(const CMatrix& states, const RMatrix& g_inv) {
  const RMatrix w = g_inv * g_inv;
  return kernels::xi_gradient(states, kernels::overlaps(states), w);
}

XiGradient tangent_gradient_or_throw(const CMatrix& states) {
  auto v = evaluate_xi(states);
  if (!v) throw SingularSet("launch set is numerically singular");
  XiGradient out;
  out.xi = v->xi;
  out.tangent = full_gradient(states, v->g_inv);
  sphere::project_tangent(states, out.tangent);
  return out;
}

CMatrix states_from_angles(const RMatrix& angles) {
  const int half = static_cast<int>(angles.rows()) / 2;
  CMatrix s(half + 1, angles.cols());
  for (Eigen::Index k = 0; k < angles.cols(); ++k) {
    HypersphericalPoint p{angles.col(k).head(half), angles.col(k).tail(half)};
    s.col(k) = hyperspherical_to_jones(p).amplitudes();
  }
  return s;
}

RMatrix chain_to_angles(const RMatrix& angles, const CMatrix& jones_gradient) {
  const int half = static_cast<int>(angles.rows()) / 2;
  RMatrix out(angles.rows(), angles.cols());
  for (Eigen::Index k = 0; k < angles.cols(); ++k) {
    HypersphericalPoint p{angles.col(k).head(half), angles.col(k).tail(half)};
    for (int r = 0; r < half; ++r) {
      out(r, k) = jones_gradient.col(k).dot(d_jones_d_angle(p, {AngleIndex::Kind::kPhi, r})).real();
      out(half + r, k) =
          jones_gradient.col(k).dot(d_jones_d_angle(p, {AngleIndex::Kind::kTheta, r})).real();
    }
  }
  return out;
}

// Parameterizations driven by the shared descent loop. Each exposes the
// point type, its Jones states, the gradient in its own coordinates and a
// trial step that also reports the Jones-space displacement.
template <typename Point>
struct Trial {
  Point point;
  CMatrix states;
  CMatrix displacement;
};

struct ProjectedParam {
  using Point = CMatrix;
  static CMatrix states(const Point& x) { return x; }
  static Point gradient(const Point& x, const CMatrix& jones_gradient) {
    CMatrix g = jones_gradient;
    sphere::project_tangent(x, g);
    return g;
  }
  static Trial<Point> trial(const Point& x, const CMatrix& /*states*/, const Point& dir, double t) {
    Trial<Point> out;
    out.displacement = sphere::retraction_displacement(x, -dir, t);
    out.states = x + out.displacement;
    sphere::normalize_columns(out.states);
    out.point = out.states;
    return out;
  }
  static long params(const Point& x) { return 2L * x.rows() * x.cols(); }
};

struct AngleParam {
  using Point = RMatrix;
  static CMatrix states(const Point& a) { return states_from_angles(a); }
  static Point gradient(const Point& a, const CMatrix& jones_gradient) {
    return chain_to_angles(a, jones_gradient);
  }
  static Trial<Point> trial(const Point& a, const CMatrix& states, const Point& dir, double t) {
    Trial<Point> out;
    out.point = a - t * dir;
    out.states = states_from_angles(out.point);
    out.displacement = out.states - states;
    return out;
  }
  static long params(const Point& a) { return static_cast<long>(a.size()); }
};

// Current iterate with everything the line search reuses.
template <typename Point>
struct Iterate {
  Point point;
  CMatrix states;
  CMatrix overlaps;
  RMatrix g_inv;
  Point gradient;
  double grad_norm = 0.0;
};

template <typename Param>
Iterate<typename Param::Point> make_iterate(typename Param::Point point, CMatrix states, RMatrix g_inv) {
  Iterate<typename Param::Point> it;
  it.overlaps = kernels::overlaps(states);
  const RMatrix w = g_inv * g_inv;
  const CMatrix jones = kernels::xi_gradient(states, it.overlaps, w);
  it.gradient = Param::gradient(point, jones);
  it.grad_norm = it.gradient.norm();
  it.point = std::move(point);
  it.states = std::move(states);
  it.g_inv = std::move(g_inv);
  return it;
}

// xi(trial) - xi(current) as -Tr(G'^-1 dG G^-1), with dG built from overlap
// differences. Subtracting the two traces directly loses every digit once
// the decrease falls below the rounding level of xi, long before the
// gradient tolerance is reached. Returns nullopt for a singular trial.
template <typename Point>
std::optional<std::pair<double, RMatrix>> xi_change(const Iterate<Point>& cur, const Trial<Point>& trial) {
  auto next = evaluate_xi(trial.states);
  if (!next) return std::nullopt;
  const double cn = stokes_constant(static_cast<int>(cur.states.rows()));
  const RMatrix dg =
      2.0 * cn * cn * kernels::squared_overlap_change(cur.states, cur.overlaps, trial.displacement);
  const double change = -(next->g_inv.cwiseProduct(cur.g_inv * dg)).sum();
  if (!std::isfinite(change)) return std::nullopt;
  return std::make_pair(change, std::move(next->g_inv));
}

template <typename Param>
OptimizerRun run_descent(typename Param::Point x0, int n, const OptimizerConfig& cfg) {
  using Point = typename Param::Point;
  CMatrix states0 = Param::states(x0);
  auto first = evaluate_xi(states0);
  if (!first) throw SingularSet("initial launch set is numerically singular");

  const double m = static_cast<double>(stokes_dim(n));
  const double tol = cfg.effective_grad_tol(n);
  const double phase1_limit = cfg.normalized_phase_threshold * m;
  const double phase1_step = cfg.normalized_phase_step * std::sqrt(static_cast<double>(Param::params(x0)));

  // xi is carried forward by accumulating accurate per-step changes, so the
  // logged values are exactly non-increasing.
  double xi = first->xi;
  Iterate<Point> cur = make_iterate<Param>(std::move(x0), std::move(states0), std::move(first->g_inv));
  const double initial_xi = xi;
  bool phase1 = xi > phase1_limit;
  double t = cfg.initial_step;
  bool warm = false;

  std::vector<TrajectorySample> trajectory;
  trajectory.push_back({0, xi, cur.grad_norm});
  StopReason reason = StopReason::kMaxIters;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    if (!std::isfinite(cur.grad_norm)) {
      reason = StopReason::kAborted;
      break;
    }
    if (cur.grad_norm < tol) {
      reason = StopReason::kConverged;
      break;
    }
    std::optional<std::pair<double, RMatrix>> accepted;
    Trial<Point> trial;
    if (phase1 && xi > phase1_limit) {
      trial = Param::trial(cur.point, cur.states, cur.gradient / cur.grad_norm, phase1_step);
      accepted = xi_change(cur, trial);
      // Phase 1 ends for good at its first non-improving step.
      if (!accepted || !(accepted->first < 0.0)) {
        phase1 = false;
        accepted.reset();
      }
    } else {
      phase1 = false;
    }
    if (!accepted) {
      if (warm) t /= cfg.backtracking_beta;
      warm = true;
      const double g2 = cur.grad_norm * cur.grad_norm;
      while (true) {
        trial = Param::trial(cur.point, cur.states, cur.gradient, t);
        accepted = xi_change(cur, trial);
        if (accepted && accepted->first <= -cfg.backtracking_alpha * t * g2) break;
        accepted.reset();
        t *= cfg.backtracking_beta;
        if (t * cur.grad_norm < 1e-18) break;
      }
      if (!accepted) {
        reason = StopReason::kLineSearchStall;
        break;
      }
    }
    xi += accepted->first;
    cur = make_iterate<Param>(std::move(trial.point), std::move(trial.states), std::move(accepted->second));
    if ((it + 1) % cfg.trajectory_stride == 0) trajectory.push_back({it + 1, xi, cur.grad_norm});
  }
  if (trajectory.back().iter != it) trajectory.push_back({it, xi, cur.grad_norm});

  CMatrix final_states = cur.states;
  sphere::normalize_columns(final_states);
  sphere::canonical_phase(final_states);
  nlohmann::json meta = {{"algorithm", algorithm_name(cfg.algorithm)},
                         {"seed", cfg.seed},
                         {"iterations", it},
                         {"stop_reason", stop_reason_name(reason)}};
  OptimizerRun run{LaunchSet(std::move(final_states), Family::kOptimized, std::move(meta)),
                   std::move(trajectory)};
  run.iterations_used = it;
  run.converged = reason == StopReason::kConverged;
  run.stop_reason = reason;
  run.initial_xi = initial_xi;
  run.final_xi = xi;
  run.final_grad_norm = cur.grad_norm;
  return run;
}

}  // namespace

XiGradient gradient_jones(const CMatrix& states) { return tangent_gradient_or_throw(states); }

XiGradient gradient_jones(const LaunchSet& set) { return tangent_gradient_or_throw(set.states()); }

AngleGradient gradient_hyperspherical(const std::vector<HypersphericalPoint>& points) {
  if (points.empty()) throw InvalidDimension("no hyperspherical points given");
  const int n = points.front().dim();
  if (static_cast<int>(points.size()) != stokes_dim(n)) {
    throw InvalidDimension("hyperspherical gradient needs N^2 - 1 points");
  }
  RMatrix angles(2 * (n - 1), points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (points[k].dim() != n) throw InvalidDimension("hyperspherical points of mixed dimension");
    angles.col(k) << points[k].phis, points[k].thetas;
  }
  const CMatrix states = states_from_angles(angles);
  auto v = evaluate_xi(states);
  if (!v) throw SingularSet("launch set is numerically singular");
  return {v->xi, chain_to_angles(angles, full_gradient(states, v->g_inv))};
}

namespace {

using ExtMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using ExtCMatrix = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, Eigen::Dynamic>;

// xi of the column-normalized states in extended precision, so finite
// differences are not swamped by the kappa(G) eps rounding of a double
// evaluation.
long double xi_extended(ExtCMatrix states) {
  const Eigen::Index n = states.rows();
  const Eigen::Index m = states.cols();
  for (Eigen::Index k = 0; k < m; ++k) states.col(k) /= states.col(k).norm();
  const long double scale = static_cast<long double>(n) / static_cast<long double>(n - 1);
  ExtMatrix g(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index k = j; k < m; ++k) {
      const long double ov = std::norm(states.col(j).dot(states.col(k)));
      g(j, k) = g(k, j) = scale * (ov - 1.0L / static_cast<long double>(n));
    }
  }
  Eigen::LLT<ExtMatrix> llt(g);
  if (llt.info() != Eigen::Success) throw SingularSet("gradient check: Gram matrix is not positive definite");
  return llt.solve(ExtMatrix::Identity(m, m)).trace();
}

ExtCMatrix extended_angles_to_states(const std::vector<HypersphericalPoint>& pts, std::size_t which, int angle,
                                     long double shift) {
  const int n = pts.front().dim();
  ExtCMatrix s(n, pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    std::vector<long double> phi(pts[k].phis.data(), pts[k].phis.data() + n - 1);
    std::vector<long double> theta(pts[k].thetas.data(), pts[k].thetas.data() + n - 1);
    if (k == which) (angle < n - 1 ? phi[angle] : theta[angle - (n - 1)]) += shift;
    long double radius = 1.0L;
    for (int i = 0; i < n; ++i) {
      const long double part = i < n - 1 ? radius * std::cos(phi[i]) : radius;
      const std::complex<long double> rot =
          i == 0 ? std::complex<long double>(1.0L, 0.0L) : std::polar(1.0L, theta[i - 1]);
      s(i, static_cast<Eigen::Index>(k)) = part * rot;
      if (i < n - 1) radius *= std::sin(phi[i]);
    }
  }
  return s;
}

// Fourth-order five-point central difference.
template <typename F>
double central_difference(const F& f, double h) {
  const long double d = 8.0L * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h));
  return static_cast<double>(d / (12.0L * h));
}

}  // namespace

GradCheckResult gradient_check(int n, Algorithm algorithm, int points, std::uint64_t seed, double step) {
  if (points < 1) throw ConfigError("gradient check needs at least one point");
  if (!(step > 0.0)) throw ConfigError("gradient check step must be positive");
  GradCheckResult out;
  out.points = points;
  for (int p = 0; p < points; ++p) {
    const CMatrix x = random_set(n, mix_seed(seed, static_cast<std::uint64_t>(p))).states();
    // xi varies on the scale of the smallest singular value of S.
    auto local_step = [&](const CMatrix& states) {
      Eigen::SelfAdjointEigenSolver<RMatrix> eig(kernels::stokes_gram(states), Eigen::EigenvaluesOnly);
      return step * std::sqrt(std::max(eig.eigenvalues()[0], 0.0));
    };
    double err = 0.0;
    double scale = 0.0;
    if (algorithm == Algorithm::kProjected) {
      const CMatrix g = gradient_jones(x).tangent;
      const double h = local_step(x);
      const ExtCMatrix xe = x.cast<std::complex<long double>>();
      for (Eigen::Index k = 0; k < x.cols(); ++k) {
        for (int r = 0; r < n; ++r) {
          for (const cplx dir : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) {
            auto shifted = [&](double t) {
              ExtCMatrix y = xe;
              y(r, k) += static_cast<long double>(t) *
                         std::complex<long double>(dir.real(), dir.imag());
              return xi_extended(std::move(y));
            };
            const double fd = central_difference(shifted, h);
            const double an = (std::conj(g(r, k)) * dir).real();
            err = std::max(err, std::abs(fd - an));
            scale = std::max(scale, std::abs(an));
          }
        }
      }
    } else {
      Rng rng = substream(seed, static_cast<std::uint64_t>(p));
      std::uniform_real_distribution<double> phi(0.1, 1.47), theta(0.0, 6.283185307179586);
      std::vector<HypersphericalPoint> pts(stokes_dim(n));
      for (auto& q : pts) {
        q.phis.resize(n - 1);
        q.thetas.resize(n - 1);
        for (int i = 0; i < n - 1; ++i) {
          q.phis[i] = phi(rng);
          q.thetas[i] = theta(rng);
        }
      }
      const AngleGradient g = gradient_hyperspherical(pts);
      CMatrix states(n, pts.size());
      for (std::size_t k = 0; k < pts.size(); ++k)
        states.col(static_cast<Eigen::Index>(k)) = hyperspherical_to_jones(pts[k]).amplitudes();
      const double h = local_step(states);
      for (std::size_t k = 0; k < pts.size(); ++k) {
        for (int a = 0; a < 2 * (n - 1); ++a) {
          auto shifted = [&](double t) {
            return xi_extended(extended_angles_to_states(pts, k, a, static_cast<long double>(t)));
          };
          const double fd = central_difference(shifted, h);
          const double an = g.angles(a, static_cast<Eigen::Index>(k));
          err = std::max(err, std::abs(fd - an));
          scale = std::max(scale, std::abs(an));
        }
      }
    }
    out.max_rel_error = std::max(out.max_rel_error, scale > 0.0 ? err / scale : err);
  }
  return out;
}

OptimizerRun descend(const LaunchSet& initial, const OptimizerConfig& cfg) {
  cfg.validate();
  const int n = initial.n();
  if (cfg.algorithm == Algorithm::kProjected) {
    return run_descent<ProjectedParam>(initial.states(), n, cfg);
  }
  RMatrix angles(2 * (n - 1), initial.size());
  for (int k = 0; k < initial.size(); ++k) {
    const HypersphericalPoint p = jones_to_hyperspherical(initial.state(k));
    angles.col(k) << p.phis, p.thetas;
  }
  return run_descent<AngleParam>(std::move(angles), n, cfg);
}

LaunchSet initial_set(int n, const OptimizerConfig& cfg, const InitSpec& init, int index) {
  const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(index);
  std::optional<LaunchSet> base;
  switch (init.family) {
    case InitFamily::kRandom:
      return random_set(n, seed);
    case InitFamily::kSic:
      base = sic_search(n, cfg.seed);
      break;
    case InitFamily::kMub:
      base = mub_set(n);
      break;
    case InitFamily::kYang:
      base = yang_nolan(n);
      break;
    case InitFamily::kFile:
      if (!init.file_set) throw ConfigError("file initialization requires a launch set");
      if (init.file_set->n() != n) throw InvalidDimension("initial set dimension does not match n");
      base = *init.file_set;
      break;
  }
  Rng rng = substream(seed, 0);
  CMatrix s = base->states();
  for (Eigen::Index k = 0; k < s.cols(); ++k) s.col(k) += kInitPerturbation * complex_gaussian(n, rng);
  sphere::normalize_columns(s);
  nlohmann::json meta = base->meta();
  meta["perturbation"] = kInitPerturbation;
  meta["perturbation_seed"] = seed;
  return LaunchSet(std::move(s), base->family(), std::move(meta));
}

MultiStartResult multi_start(int n, const OptimizerConfig& cfg, int num_starts, const InitSpec& init) {
  cfg.validate();
  if (num_starts < 1) throw ConfigError("num_starts must be >= 1");
  // Resolve a SIC seed set once, outside the parallel region.
  InitSpec resolved = init;
  if (init.family == InitFamily::kSic) {
    resolved.family = InitFamily::kFile;
    resolved.file_set = sic_search(n, cfg.seed);
  }

  std::vector<std::optional<OptimizerRun>> runs(num_starts);
  std::vector<StartSummary> summaries(num_starts);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < num_starts; ++i) {
    StartSummary& s = summaries[i];
    s.index = i;
    s.seed = cfg.seed + static_cast<std::uint64_t>(i);
    try {
      OptimizerConfig local = cfg;
      local.seed = s.seed;
      runs[i] = descend(initial_set(n, cfg, resolved, i), local);
      const OptimizerRun& r = *runs[i];
      s.ok = r.stop_reason != StopReason::kAborted;
      s.initial_xi = r.initial_xi;
      s.final_xi = r.final_xi;
      s.final_penalty_db = to_db(r.final_xi / stokes_dim(n));
      s.iterations_used = r.iterations_used;
      s.converged = r.converged;
      s.stop_reason = r.stop_reason;
    } catch (const std::exception& e) {
      s.ok = false;
      s.error = e.what();
      runs[i].reset();
    }
  }

  int best = -1;
  for (int i = 0; i < num_starts; ++i) {
    if (!summaries[i].ok) continue;
    if (best < 0 || summaries[i].final_xi < summaries[best].final_xi) best = i;
  }
  if (best < 0) {
    std::string detail;
    for (const auto& s : summaries) {
      detail += "\n  start " + std::to_string(s.index) + ": " +
                (s.error.empty() ? stop_reason_name(s.stop_reason) : s.error);
    }
    throw SearchFailed("all optimizer starts failed:" + detail, std::numeric_limits<double>::infinity());
  }
  runs[best]->final_set.meta()["init"] = init_family_name(init.family);
  runs[best]->final_set.meta()["start"] = best;
  return MultiStartResult{std::move(*runs[best]), best, std::move(summaries)};
}

}  // namespace stokesopt
