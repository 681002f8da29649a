#pragma once

// Launch-state families: Yang-Nolan, mutually unbiased bases, numerically
// searched SIC-POVMs, random sets and the orthonormal simplex, plus the
// closed-form penalties and parallelotope volumes of the SIC and MUB sets.

#include <cstdint>
#include <string>

#include "json.hpp"
#include "stokesopt/stokes_core.hpp"

namespace stokesopt {

enum class Family { kYangNolan, kMub, kSic, kRandom, kOptimized, kCustom, kSimplex };

std::string family_name(Family f);
/// Accepts the serialized names ("yang-nolan", "mub", ...); throws ParseError.
Family family_from_name(const std::string& name);

/// N^2 - 1 unit Jones states, stored as the columns of an N x (N^2 - 1)
/// matrix in module ordering.
class LaunchSet {
 public:
  /// Throws InvalidDimension unless there are exactly N^2 - 1 columns, each
  /// unit-norm to 1e-12.
  LaunchSet(CMatrix states, Family family, nlohmann::json meta = nlohmann::json::object());

  int n() const { return static_cast<int>(states_.rows()); }
  int size() const { return static_cast<int>(states_.cols()); }
  const CMatrix& states() const { return states_; }
  JonesState state(int i) const { return JonesState(states_.col(i)); }
  Family family() const { return family_; }
  const nlohmann::json& meta() const { return meta_; }
  nlohmann::json& meta() { return meta_; }

 private:
  CMatrix states_;
  Family family_;
  nlohmann::json meta_;
};

/// N orthonormal states; their Stokes images form a regular simplex.
class SimplexSet {
 public:
  /// Throws InvalidDimension unless `states` is N x N with orthonormal
  /// columns (to 1e-10).
  explicit SimplexSet(CMatrix states, nlohmann::json meta = nlohmann::json::object());

  int n() const { return static_cast<int>(states_.rows()); }
  const CMatrix& states() const { return states_; }
  JonesState state(int i) const { return JonesState(states_.col(i)); }
  const nlohmann::json& meta() const { return meta_; }

 private:
  CMatrix states_;
  nlohmann::json meta_;
};

/// N - 1 eigenmodes, then (|i> + |j>)/sqrt2 and (|i> + i|j>)/sqrt2 for
/// i < j in lexicographic order.
LaunchSet yang_nolan(int n);

/// N + 1 mutually unbiased bases for prime n, each minus its last vector.
/// Throws UnsupportedDimension for non-prime n.
LaunchSet mub_set(int n);

bool is_prime(int n);

struct SicSearchOptions {
  double tol = 1e-10;
  int max_iters = 200000;
  int starts = 8;
};

struct SicSearchResult {
  CMatrix states;  // all N^2 states
  double residual = 0.0;
  int start = -1;
  int iterations = 0;
};

/// Max over i != j of ||<a_i|a_j>|^2 - 1/(N+1)| for N^2 states.
double sic_residual(const CMatrix& states);

/// Frame-potential search for a full N^2-element SIC. Start s draws its
/// initial states from substream s of `seed`; the first start (by index)
/// that reaches `tol` wins. Throws SearchFailed carrying the best residual
/// when none does.
SicSearchResult sic_search_full(int n, std::uint64_t seed, const SicSearchOptions& opts = {});

/// sic_search_full with the last state dropped.
LaunchSet sic_search(int n, std::uint64_t seed, double tol = 1e-10);
LaunchSet sic_search(int n, std::uint64_t seed, const SicSearchOptions& opts);

/// Closed forms. Volumes are natural logs.
double sic_penalty(int n);
double mub_penalty(int n);
double sic_log_volume(int n);
double mub_log_volume(int n);

/// Gram matrices implied by the defining overlaps, without building states.
RMatrix sic_gram_analytic(int n);
RMatrix mub_gram_analytic(int n);
/// Yang-Nolan Gram from the pairwise squared-overlap table of the family.
RMatrix yang_nolan_gram_analytic(int n);

/// Random orthonormal basis (columns of a Haar unitary).
SimplexSet simplex_set(int n, std::uint64_t seed);

/// N^2 - 1 normalized complex-Gaussian states, redrawn until the set is
/// nonsingular.
LaunchSet random_set(int n, std::uint64_t seed);

}  // namespace stokesopt
