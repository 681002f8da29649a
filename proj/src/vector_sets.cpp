#include "stokesopt/vector_sets.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "stokesopt/error.hpp"
#include "stokesopt/gram_metrics.hpp"
#include "stokesopt/kernels.hpp"
#include "stokesopt/rng.hpp"
#include "stokesopt/sphere.hpp"

namespace stokesopt {

namespace {

void require_dim(int n) {
  if (n < 2) throw InvalidDimension("mode count must be >= 2, got " + std::to_string(n));
}

constexpr const char* kFamilyNames[] = {"yang-nolan", "mub",    "sic",    "random",
                                        "optimized",  "custom", "simplex"};

}  // namespace

std::string family_name(Family f) { return kFamilyNames[static_cast<int>(f)]; }

Family family_from_name(const std::string& name) {
  for (int i = 0; i < 7; ++i) {
    if (name == kFamilyNames[i]) return static_cast<Family>(i);
  }
  throw ParseError("family: unknown value \"" + name + "\"");
}

LaunchSet::LaunchSet(CMatrix states, Family family, nlohmann::json meta)
    : states_(std::move(states)), family_(family), meta_(std::move(meta)) {
  const int n = static_cast<int>(states_.rows());
  require_dim(n);
  if (states_.cols() != stokes_dim(n)) {
    throw InvalidDimension("launch set for n=" + std::to_string(n) + " needs " +
                           std::to_string(stokes_dim(n)) + " states, got " +
                           std::to_string(states_.cols()));
  }
  if (!(sphere::max_norm_deviation(states_) <= 1e-12)) {
    throw InvalidDimension("launch set contains a state that is not unit-norm");
  }
}

SimplexSet::SimplexSet(CMatrix states, nlohmann::json meta)
    : states_(std::move(states)), meta_(std::move(meta)) {
  const int n = static_cast<int>(states_.rows());
  require_dim(n);
  if (states_.cols() != n) throw InvalidDimension("simplex set needs exactly n states");
  const CMatrix gram = states_.adjoint() * states_;
  if (!((gram - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-10)) {
    throw InvalidDimension("simplex set states are not orthonormal");
  }
}

LaunchSet yang_nolan(int n) {
  require_dim(n);
  const double h = 1.0 / std::sqrt(2.0);
  CMatrix s = CMatrix::Zero(n, stokes_dim(n));
  int col = 0;
  for (int i = 0; i < n - 1; ++i) s(i, col++) = 1.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++col) {
      s(i, col) = h;
      s(j, col) = h;
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++col) {
      s(i, col) = h;
      s(j, col) = cplx(0.0, h);
    }
  }
  return LaunchSet(std::move(s), Family::kYangNolan, {{"construction", "yang-nolan"}});
}

bool is_prime(int n) {
  if (n < 2) return false;
  for (int d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

LaunchSet mub_set(int n) {
  require_dim(n);
  if (!is_prime(n)) {
    throw UnsupportedDimension("mutually unbiased bases: n must be prime (got " + std::to_string(n) +
                               "; prime powers are not supported)");
  }
  std::vector<CMatrix> bases;
  bases.push_back(CMatrix::Identity(n, n));
  if (n == 2) {
    const double h = 1.0 / std::sqrt(2.0);
    CMatrix x(2, 2), y(2, 2);
    x << h, h, h, -h;
    y << h, h, cplx(0.0, h), cplx(0.0, -h);
    bases.push_back(x);
    bases.push_back(y);
  } else {
    const double amp = 1.0 / std::sqrt(static_cast<double>(n));
    for (int m = 0; m < n; ++m) {
      CMatrix b(n, n);
      for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
          // Reduce the exponent mod n first so the phase argument stays small.
          const long e = (static_cast<long>(m) * j * j + static_cast<long>(k) * j) % n;
          b(j, k) = std::polar(amp, 2.0 * std::numbers::pi * static_cast<double>(e) / n);
        }
      }
      bases.push_back(std::move(b));
    }
  }
  CMatrix s(n, stokes_dim(n));
  int col = 0;
  for (const auto& b : bases) {
    for (int k = 0; k < n - 1; ++k) s.col(col++) = b.col(k);
  }
  return LaunchSet(std::move(s), Family::kMub, {{"construction", "mub-prime"}});
}

double sic_residual(const CMatrix& states) {
  const int n = static_cast<int>(states.rows());
  const double target = 1.0 / (n + 1);
  const CMatrix ov = kernels::overlaps(states);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < ov.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) worst = std::max(worst, std::abs(std::norm(ov(i, j)) - target));
  }
  return worst;
}

namespace {

// Change of the frame potential between x and x + d, accurate far below the
// rounding level of the potential itself.
double frame_potential_change(const CMatrix& ov, const CMatrix& x, const CMatrix& d) {
  const RMatrix dp = kernels::squared_overlap_change(x, ov, d);
  double total = 0.0;
  for (Eigen::Index j = 0; j < ov.cols(); ++j) {
    const double nj = ov(j, j).real();
    for (Eigen::Index i = 0; i < ov.rows(); ++i) {
      if (i == j) continue;
      const double p = std::norm(ov(i, j)) / (ov(i, i).real() * nj);
      total += dp(i, j) * (2.0 * p + dp(i, j));
    }
  }
  return total;
}

double real_inner(const CMatrix& a, const CMatrix& b) {
  return (a.array().conjugate() * b.array()).sum().real();
}

// Limited-memory quasi-Newton preconditioner for tangent gradients. Stored
// pairs live in the ambient space; directions are re-projected onto the
// current tangent space before use.
class QuasiNewtonMemory {
 public:
  explicit QuasiNewtonMemory(int depth) : depth_(depth) {}

  bool empty() const { return s_.empty(); }

  void clear() {
    s_.clear();
    y_.clear();
    rho_.clear();
  }

  void push(CMatrix s, CMatrix y) {
    const double sy = real_inner(s, y);
    if (!(sy > 1e-14 * s.norm() * y.norm())) return;
    if (static_cast<int>(s_.size()) == depth_) {
      s_.erase(s_.begin());
      y_.erase(y_.begin());
      rho_.erase(rho_.begin());
    }
    rho_.push_back(1.0 / sy);
    s_.push_back(std::move(s));
    y_.push_back(std::move(y));
  }

  CMatrix direction(const CMatrix& x, const CMatrix& g) const {
    CMatrix q = g;
    const int m = static_cast<int>(s_.size());
    std::vector<double> a(m);
    for (int i = m - 1; i >= 0; --i) {
      a[i] = rho_[i] * real_inner(s_[i], q);
      q -= a[i] * y_[i];
    }
    if (m > 0) q *= real_inner(s_[m - 1], y_[m - 1]) / y_[m - 1].squaredNorm();
    for (int i = 0; i < m; ++i) {
      const double b = rho_[i] * real_inner(y_[i], q);
      q += (a[i] - b) * s_[i];
    }
    CMatrix p = -q;
    sphere::project_tangent(x, p);
    return p;
  }

 private:
  int depth_;
  std::vector<CMatrix> s_;
  std::vector<CMatrix> y_;
  std::vector<double> rho_;
};

struct SicAttempt {
  CMatrix states;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

constexpr int kResidualCheckStride = 10;

CMatrix tangent_frame_gradient(const CMatrix& x) {
  CMatrix g;
  kernels::frame_potential(x, &g);
  sphere::project_tangent(x, g);
  return g;
}

SicAttempt sic_descent(int n, std::uint64_t seed, int start, const SicSearchOptions& opts,
                       const std::atomic<int>& winner) {
  constexpr double kAlpha = 1e-4;
  constexpr double kBeta = 0.5;
  Rng rng = substream(seed, static_cast<std::uint64_t>(start));
  const int count = n * n;
  CMatrix x(n, count);
  for (int k = 0; k < count; ++k) x.col(k) = complex_gaussian(n, rng);
  sphere::normalize_columns(x);

  SicAttempt out;
  QuasiNewtonMemory memory(8);
  CMatrix g = tangent_frame_gradient(x);
  for (int it = 0; it <= opts.max_iters; ++it) {
    out.iterations = it;
    if (it % kResidualCheckStride == 0) {
      if (winner.load(std::memory_order_relaxed) < start) break;
      out.residual = sic_residual(x);
      if (out.residual < opts.tol) {
        out.converged = true;
        break;
      }
    }
    if (it == opts.max_iters) break;
    if (!(g.squaredNorm() > 0.0)) break;
    CMatrix p = memory.direction(x, g);
    double slope = real_inner(g, p);
    if (!(slope < 0.0)) {
      memory.clear();
      p = -g;
      slope = -g.squaredNorm();
    }
    const CMatrix ov = kernels::overlaps(x);
    double t = 1.0;
    bool accepted = false;
    while (t > 1e-20) {
      CMatrix d = sphere::retraction_displacement(x, p, t);
      const double change = frame_potential_change(ov, x, d);
      if (change <= kAlpha * t * slope) {
        x += d;
        sphere::normalize_columns(x);
        CMatrix g_new = tangent_frame_gradient(x);
        memory.push(std::move(d), g_new - g);
        g = std::move(g_new);
        accepted = true;
        break;
      }
      t *= kBeta;
    }
    if (!accepted) {
      if (memory.empty()) break;
      memory.clear();
    }
  }
  out.residual = sic_residual(x);
  out.converged = out.residual < opts.tol;
  out.states = std::move(x);
  return out;
}

}  // namespace

SicSearchResult sic_search_full(int n, std::uint64_t seed, const SicSearchOptions& opts) {
  require_dim(n);
  if (!(opts.tol > 0.0)) throw ConfigError("sic search tolerance must be positive");
  if (opts.starts < 1 || opts.max_iters < 1) throw ConfigError("sic search needs >= 1 start and iteration");

  std::vector<SicAttempt> attempts(opts.starts);
  std::atomic<int> winner{opts.starts};
#pragma omp parallel for schedule(dynamic, 1)
  for (int s = 0; s < opts.starts; ++s) {
    if (winner.load() < s) continue;
    attempts[s] = sic_descent(n, seed, s, opts, winner);
    if (attempts[s].converged) {
      int cur = winner.load();
      while (s < cur && !winner.compare_exchange_weak(cur, s)) {
      }
    }
  }

  const int w = winner.load();
  if (w < opts.starts) {
    SicSearchResult r;
    r.states = std::move(attempts[w].states);
    r.residual = attempts[w].residual;
    r.start = w;
    r.iterations = attempts[w].iterations;
    return r;
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& a : attempts) best = std::min(best, a.residual);
  throw SearchFailed("SIC search for n=" + std::to_string(n) + " did not reach tolerance " +
                         std::to_string(opts.tol) + " (best residual " + std::to_string(best) + ")",
                     best);
}

LaunchSet sic_search(int n, std::uint64_t seed, double tol) {
  SicSearchOptions opts;
  opts.tol = tol;
  return sic_search(n, seed, opts);
}

LaunchSet sic_search(int n, std::uint64_t seed, const SicSearchOptions& opts) {
  SicSearchResult r = sic_search_full(n, seed, opts);
  CMatrix kept = r.states.leftCols(stokes_dim(n));
  sphere::canonical_phase(kept);
  nlohmann::json meta = {{"construction", "sic-search"}, {"seed", seed},
                         {"tol", opts.tol},              {"residual", r.residual},
                         {"start", r.start},             {"iterations", r.iterations}};
  return LaunchSet(std::move(kept), Family::kSic, std::move(meta));
}

double sic_penalty(int n) {
  require_dim(n);
  const double nn = static_cast<double>(n) * n;
  return 2.0 * (nn - 1.0) / nn;
}

double mub_penalty(int n) {
  require_dim(n);
  return 2.0 * (n - 1.0) / n;
}

double sic_log_volume(int n) {
  require_dim(n);
  const double nn = static_cast<double>(n) * n;
  return (nn - 2.0) * std::log(static_cast<double>(n)) - 0.5 * (nn - 1.0) * std::log(nn - 1.0);
}

double mub_log_volume(int n) {
  require_dim(n);
  const double nd = static_cast<double>(n);
  return 0.5 * (nd - 2.0) * (nd + 1.0) * std::log(nd) - 0.5 * (nd * nd - 1.0) * std::log(nd - 1.0);
}

RMatrix sic_gram_analytic(int n) {
  require_dim(n);
  const int m = stokes_dim(n);
  RMatrix g = RMatrix::Constant(m, m, -1.0 / m);
  g.diagonal().setOnes();
  return g;
}

RMatrix mub_gram_analytic(int n) {
  require_dim(n);
  const int m = stokes_dim(n);
  RMatrix g = RMatrix::Zero(m, m);
  for (int b = 0; b <= n; ++b) {
    g.block(b * (n - 1), b * (n - 1), n - 1, n - 1).setConstant(-1.0 / (n - 1));
  }
  g.diagonal().setOnes();
  return g;
}

namespace {

// State labels of the Yang-Nolan family: kind 0 = eigenmode |i>,
// 1 = (|i>+|j>)/sqrt2, 2 = (|i>+i|j>)/sqrt2.
struct YangLabel {
  int kind;
  int i;
  int j;
};

int delta(int a, int b) { return a == b ? 1 : 0; }

double yang_overlap_sq(const YangLabel& a, const YangLabel& b) {
  const YangLabel& p = a.kind <= b.kind ? a : b;
  const YangLabel& q = a.kind <= b.kind ? b : a;
  const int i = p.i, j = p.j, k = q.i, l = q.j;
  if (p.kind == 0 && q.kind == 0) return delta(i, k);
  if (p.kind == 0 && q.kind == 1) {
    const int s = delta(i, k) + delta(i, l);
    return s * s / 2.0;
  }
  if (p.kind == 0 && q.kind == 2) return (delta(i, k) + delta(i, l)) / 2.0;
  if (p.kind == 1 && q.kind == 1) {
    const int s = delta(i, k) + delta(i, l) + delta(j, k) + delta(j, l);
    return s * s / 4.0;
  }
  if (p.kind == 1 && q.kind == 2) {
    const int re = delta(i, k) + delta(j, k);
    const int im = delta(i, l) + delta(j, l);
    return (re * re + im * im) / 4.0;
  }
  const int re = delta(i, k) + delta(j, l);
  const int im = delta(i, l) - delta(j, k);
  return (re * re + im * im) / 4.0;
}

}  // namespace

RMatrix yang_nolan_gram_analytic(int n) {
  require_dim(n);
  std::vector<YangLabel> labels;
  for (int i = 0; i < n - 1; ++i) labels.push_back({0, i, -1});
  for (int kind = 1; kind <= 2; ++kind) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) labels.push_back({kind, i, j});
    }
  }
  const int m = stokes_dim(n);
  const double cn = stokes_constant(n);
  RMatrix g(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      g(a, b) = 2.0 * cn * cn * (yang_overlap_sq(labels[a], labels[b]) - 1.0 / n);
    }
  }
  return g;
}

SimplexSet simplex_set(int n, std::uint64_t seed) {
  require_dim(n);
  Rng rng = substream(seed, 0);
  return SimplexSet(haar_unitary(n, rng), {{"construction", "haar-basis"}, {"seed", seed}});
}

LaunchSet random_set(int n, std::uint64_t seed) {
  require_dim(n);
  const int m = stokes_dim(n);
  for (std::uint64_t draw = 0;; ++draw) {
    Rng rng = substream(seed, draw);
    CMatrix s(n, m);
    for (int k = 0; k < m; ++k) s.col(k) = complex_gaussian(n, rng);
    sphere::normalize_columns(s);
    if (gram_condition(kernels::stokes_gram(s)) <= kSingularGramCondition) {
      return LaunchSet(std::move(s), Family::kRandom,
                       {{"construction", "complex-gaussian"}, {"seed", seed}, {"draw", draw}});
    }
  }
}

}  // namespace stokesopt
