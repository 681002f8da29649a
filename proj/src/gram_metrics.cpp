#include "stokesopt/gram_metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "stokesopt/error.hpp"
#include "stokesopt/kernels.hpp"

namespace stokesopt {

namespace {

std::string format_condition(double c) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", c);
  return buf;
}

SetMetrics finish(const RMatrix& g, RVector singular_values) {
  SetMetrics m;
  const double count = static_cast<double>(g.rows());
  m.xi = cost_from_gram(g);
  m.penalty_linear = m.xi / count;
  m.penalty_db = to_db(m.penalty_linear);
  m.condition_number = singular_values[0] / singular_values[singular_values.size() - 1];
  double log_vol = 0.0;
  for (Eigen::Index k = 0; k < singular_values.size(); ++k) log_vol += std::log(singular_values[k]);
  m.log_volume = log_vol;
  m.singular_values = std::move(singular_values);
  m.bound_ok = m.xi >= count - 1e-6;
  return m;
}

// Metrics from the singular values of S alone (descending).
SetMetrics from_spectrum(RVector singular_values) {
  SetMetrics m;
  const double count = static_cast<double>(singular_values.size());
  m.xi = singular_values.cwiseAbs2().cwiseInverse().sum();
  m.penalty_linear = m.xi / count;
  m.penalty_db = to_db(m.penalty_linear);
  m.condition_number = singular_values[0] / singular_values[singular_values.size() - 1];
  m.log_volume = singular_values.array().log().sum();
  m.singular_values = std::move(singular_values);
  m.bound_ok = m.xi >= count - 1e-6;
  return m;
}

}  // namespace

RMatrix gram(const LaunchSet& set) { return kernels::stokes_gram(set.states()); }

RMatrix coefficient_matrix(const LaunchSet& set) {
  RMatrix s(set.size(), stokes_dim(set.n()));
  for (int i = 0; i < set.size(); ++i) s.row(i) = stokes_components(set.states().col(i)).transpose();
  return s;
}

double gram_condition(const RMatrix& g) {
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(g, Eigen::EigenvaluesOnly);
  const RVector& ev = eig.eigenvalues();
  const double lo = ev[0];
  const double hi = ev[ev.size() - 1];
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

void require_nonsingular(const RMatrix& g) {
  const double c = gram_condition(g);
  if (!(c <= kSingularGramCondition)) {
    throw SingularSet("launch set is numerically singular (Gram condition number " +
                      format_condition(c) + ")");
  }
}

double cost_from_gram(const RMatrix& g) {
  require_nonsingular(g);
  Eigen::LLT<RMatrix> llt(g);
  if (llt.info() != Eigen::Success) throw SingularSet("Gram matrix is not positive definite");
  // Tr(G^-1) = ||L^-1||_F^2
  RMatrix linv = RMatrix::Identity(g.rows(), g.cols());
  llt.matrixL().solveInPlace(linv);
  return linv.squaredNorm();
}

double cost(const LaunchSet& set) { return cost_from_gram(gram(set)); }

SetMetrics metrics(const LaunchSet& set) {
  const RMatrix g = gram(set);
  Eigen::BDCSVD<RMatrix> svd(coefficient_matrix(set));
  return finish(g, svd.singularValues());
}

SetMetrics metrics_from_gram(const RMatrix& g) {
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(g, Eigen::EigenvaluesOnly);
  RVector sv = eig.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
  return finish(g, std::move(sv));
}

SetMetrics sic_metrics_closed_form(int n) {
  if (n < 2) throw InvalidDimension("n must be at least 2");
  // G = (1 + 1/M) I - J/M: eigenvalues 1 + 1/M (M - 1 times) and 1/M.
  const int m = stokes_dim(n);
  RVector sv(m);
  sv.head(m - 1).setConstant(std::sqrt(1.0 + 1.0 / m));
  sv[m - 1] = std::sqrt(1.0 / m);
  return from_spectrum(std::move(sv));
}

SetMetrics mub_metrics_closed_form(int n) {
  if (n < 2) throw InvalidDimension("n must be at least 2");
  // N + 1 blocks (1 + 1/(N-1)) I - J/(N-1) of size N - 1: eigenvalues
  // N/(N-1) (N - 2 times per block) and 1/(N-1).
  const int blocks = n + 1;
  RVector sv(stokes_dim(n));
  const int big = blocks * (n - 2);
  sv.head(big).setConstant(std::sqrt(static_cast<double>(n) / (n - 1)));
  sv.tail(blocks).setConstant(std::sqrt(1.0 / (n - 1)));
  return from_spectrum(std::move(sv));
}

double variance_prediction(const LaunchSet& set, double sigma_tg_sq) {
  if (sigma_tg_sq < 0.0) throw ConfigError("variance must be non-negative");
  if (sigma_tg_sq == 0.0) return 0.0;
  return sigma_tg_sq * cost(set);
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

}  // namespace stokesopt
