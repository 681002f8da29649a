#pragma once

// Test oracles shared by the unit tests and the acceptance binary. They are
// deliberately independent of the library's fast paths: xi is evaluated in
// extended precision from explicit overlaps, and gradients are checked with
// a fourth-order central stencil scaled to the conditioning of the set.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "stokesopt/gram_metrics.hpp"
#include "stokesopt/kernels.hpp"
#include "stokesopt/stokes_core.hpp"
#include "stokesopt/vector_sets.hpp"

namespace stokesopt::oracle {

using ExtMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using ExtCMatrix = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, Eigen::Dynamic>;

/// Tr(G^-1) for column-normalized states, all in long double via LU.
inline long double xi_oracle(ExtCMatrix states) {
  const Eigen::Index n = states.rows();
  const Eigen::Index m = states.cols();
  for (Eigen::Index k = 0; k < m; ++k) states.col(k) /= states.col(k).norm();
  ExtMatrix g(m, m);
  const long double c2x2 = static_cast<long double>(n) / static_cast<long double>(n - 1);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index k = 0; k < m; ++k)
      g(j, k) = c2x2 * (std::norm(states.col(j).dot(states.col(k))) - 1.0L / static_cast<long double>(n));
  return Eigen::FullPivLU<ExtMatrix>(g).inverse().trace();
}

inline long double xi_oracle(const CMatrix& states) { return xi_oracle(ExtCMatrix(states.cast<std::complex<long double>>())); }

/// Smallest singular value of S from the double-precision Gram.
inline double sigma_min(const CMatrix& states) {
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(kernels::stokes_gram(states), Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(eig.eigenvalues()[0], 0.0));
}

template <typename F>
double five_point(const F& f, double h) {
  const long double d = 8.0L * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h));
  return static_cast<double>(d / (12.0L * h));
}

/// Directional derivatives of xi along every real and imaginary amplitude,
/// with columns renormalized after the shift. Entry (r, k) holds
/// d/dRe + i d/dIm, directly comparable with the tangent gradient.
inline CMatrix fd_gradient_jones(const CMatrix& states, double rel_step = 1e-3) {
  const double h = rel_step * sigma_min(states);
  const ExtCMatrix x = states.cast<std::complex<long double>>();
  CMatrix out(states.rows(), states.cols());
  for (Eigen::Index k = 0; k < states.cols(); ++k) {
    for (Eigen::Index r = 0; r < states.rows(); ++r) {
      double parts[2];
      for (int p = 0; p < 2; ++p) {
        const std::complex<long double> dir = p == 0 ? std::complex<long double>(1, 0) : std::complex<long double>(0, 1);
        parts[p] = five_point(
            [&](double t) {
              ExtCMatrix y = x;
              y(r, k) += static_cast<long double>(t) * dir;
              return xi_oracle(std::move(y));
            },
            h);
      }
      out(r, k) = cplx(parts[0], parts[1]);
    }
  }
  return out;
}

/// Extended-precision hyperspherical map (independent of the library's).
inline ExtCMatrix angles_to_states(const std::vector<HypersphericalPoint>& pts) {
  const int n = pts.front().dim();
  ExtCMatrix s(n, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) {
    long double radius = 1.0L;
    for (int i = 0; i < n; ++i) {
      const long double part = i < n - 1 ? radius * std::cos(static_cast<long double>(pts[k].phis[i])) : radius;
      const std::complex<long double> rot =
          i == 0 ? std::complex<long double>(1, 0)
                 : std::polar(1.0L, static_cast<long double>(pts[k].thetas[i - 1]));
      s(i, static_cast<Eigen::Index>(k)) = part * rot;
      if (i < n - 1) radius *= std::sin(static_cast<long double>(pts[k].phis[i]));
    }
  }
  return s;
}

/// d(xi)/d(angle): rows are phi_1..phi_{N-1} then theta_1..theta_{N-1}.
inline RMatrix fd_gradient_angles(const std::vector<HypersphericalPoint>& pts, double rel_step = 1e-3) {
  const int n = pts.front().dim();
  const ExtCMatrix base = angles_to_states(pts);
  const double h = rel_step * sigma_min(base.cast<cplx>());
  RMatrix out(2 * (n - 1), static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) {
    for (int a = 0; a < 2 * (n - 1); ++a) {
      out(a, static_cast<Eigen::Index>(k)) = five_point(
          [&](double t) {
            auto q = pts;
            (a < n - 1 ? q[k].phis[a] : q[k].thetas[a - (n - 1)]) += t;
            return xi_oracle(angles_to_states(q));
          },
          h);
    }
  }
  return out;
}

/// max |a - b| / max |b|
template <typename A, typename B>
double rel_error(const A& a, const B& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

/// Unit Jones vector with N=2 Stokes image (sin t cos p, sin t sin p, cos t).
inline CVector jones_from_poincare(double theta, double phi) {
  CVector v(2);
  v << std::cos(theta / 2.0), std::polar(std::sin(theta / 2.0), phi);
  return v;
}

/// Deliberately oblique variant of a set: every state but the first is
/// pulled towards the first, s_k' = normalize(s_k + lean s_0).
inline LaunchSet oblique_set(const LaunchSet& base, double lean = 0.8) {
  CMatrix s = base.states();
  for (Eigen::Index k = 1; k < s.cols(); ++k) {
    s.col(k) += lean * base.states().col(0);
    s.col(k).normalize();
  }
  return LaunchSet(std::move(s), Family::kCustom);
}

/// Registry for the lower-bound invariant: every set a test produces is
/// checked for xi >= N^2 - 1 - 1e-6 and log_volume <= 0.
struct BoundRecord {
  int checked = 0;
  int violations = 0;
  double worst_margin = 1e300;  // min over sets of xi - (N^2 - 1)
  double max_log_volume = -1e300;
};

inline BoundRecord& bound_registry() {
  static BoundRecord r;
  return r;
}

/// Returns true when both invariants hold.
inline bool record_bounds(const SetMetrics& m, int n) {
  BoundRecord& r = bound_registry();
  const double margin = m.xi - stokes_dim(n);
  const bool ok = margin >= -1e-6 && m.log_volume <= 1e-12;
  ++r.checked;
  if (!ok) ++r.violations;
  r.worst_margin = std::min(r.worst_margin, margin);
  r.max_log_volume = std::max(r.max_log_volume, m.log_volume);
  return ok;
}

inline bool record_bounds(const LaunchSet& set) { return record_bounds(metrics(set), set.n()); }

}  // namespace stokesopt::oracle
