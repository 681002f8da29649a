#pragma once

// Quality metrics of a launch set: Stokes Gram matrix, noise-amplification
// cost xi = Tr(G^-1), penalty, singular values of the coefficient matrix,
// condition number and parallelotope log-volume.

#include "stokesopt/stokes_core.hpp"
#include "stokesopt/vector_sets.hpp"

namespace stokesopt {

/// Sets whose Gram condition number exceeds this are rejected as singular
/// (equivalently kappa(S) > 1e7).
inline constexpr double kSingularGramCondition = 1e14;

struct SetMetrics {
  double xi = 0.0;
  double penalty_linear = 0.0;
  double penalty_db = 0.0;
  RVector singular_values;  // of S, descending
  double condition_number = 0.0;
  double log_volume = 0.0;
  bool bound_ok = false;
};

/// G_jk = s_j . s_k from Jones overlaps (OpenMP kernel).
RMatrix gram(const LaunchSet& set);

/// Coefficient matrix S: row i is the Stokes image of state i.
RMatrix coefficient_matrix(const LaunchSet& set);

/// Condition number of a symmetric positive semi-definite Gram matrix
/// (infinity when the smallest eigenvalue is not positive).
double gram_condition(const RMatrix& g);

/// Throws SingularSet when gram_condition(g) exceeds kSingularGramCondition.
void require_nonsingular(const RMatrix& g);

/// Tr(G^-1) through a Cholesky factor. Throws SingularSet.
double cost_from_gram(const RMatrix& g);
double cost(const LaunchSet& set);

/// All metrics; singular values come from an SVD of the explicit S.
SetMetrics metrics(const LaunchSet& set);

/// Same fields from the Gram matrix alone (singular values of S are the
/// square roots of the eigenvalues of G).
SetMetrics metrics_from_gram(const RMatrix& g);

/// Metrics of the SIC and MUB families from the closed-form Gram spectra
/// (no construction); valid for every n >= 2.
SetMetrics sic_metrics_closed_form(int n);
SetMetrics mub_metrics_closed_form(int n);

/// sigma_tg_sq * xi: expected ||delta tau_s||^2 of the reconstruction.
double variance_prediction(const LaunchSet& set, double sigma_tg_sq);

/// 10 log10(x).
double to_db(double linear);

}  // namespace stokesopt
