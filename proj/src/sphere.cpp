#include "stokesopt/sphere.hpp"

#include <algorithm>
#include <cmath>

namespace stokesopt::sphere {

void normalize_columns(CMatrix& x) {
  for (Eigen::Index k = 0; k < x.cols(); ++k) x.col(k) /= x.col(k).norm();
}

void project_tangent(const CMatrix& x, CMatrix& g) {
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double radial = x.col(k).dot(g.col(k)).real();
    g.col(k) -= radial * x.col(k);
  }
}

CMatrix retract(const CMatrix& x, const CMatrix& direction, double t) {
  CMatrix out = x - t * direction;
  normalize_columns(out);
  return out;
}

CMatrix retraction_displacement(const CMatrix& x, const CMatrix& p, double t) {
  // With nu^2 = 1 + t^2 |p_k|^2 the displacement is t p_k / nu + (1/nu - 1) x_k.
  CMatrix d(x.rows(), x.cols());
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double q = t * t * p.col(k).squaredNorm();
    const double nu = std::sqrt(1.0 + q);
    d.col(k) = (t / nu) * p.col(k) - (q / (nu * (1.0 + nu))) * x.col(k);
  }
  return d;
}

double max_norm_deviation(const CMatrix& x) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    worst = std::max(worst, std::abs(x.col(k).norm() - 1.0));
  }
  return worst;
}

void canonical_phase(CMatrix& x) {
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    Eigen::Index best = 0;
    double best_mag = -1.0;
    for (Eigen::Index v = 0; v < x.rows(); ++v) {
      const double mag = std::abs(x(v, k));
      // Near-ties resolve to the lower index so files stay stable under
      // rounding noise.
      if (mag > best_mag * (1.0 + 1e-12)) {
        best = v;
        best_mag = mag;
      }
    }
    if (best_mag > 0.0) {
      x.col(k) *= std::polar(1.0, -std::arg(x(best, k)));
      x(best, k) = cplx(std::abs(x(best, k)), 0.0);
    }
  }
}

}  // namespace stokesopt::sphere
