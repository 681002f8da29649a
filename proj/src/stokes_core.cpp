#include "stokesopt/stokes_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stokesopt/error.hpp"

namespace stokesopt {

namespace {

void require_dim(int n) {
  if (n < 2) {
    throw InvalidDimension("mode count must be >= 2, got " + std::to_string(n));
  }
}

void require_same(int a, int b, const char* what) {
  if (a != b) {
    throw InvalidDimension(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                           " vs " + std::to_string(b) + ")");
  }
}

double ladder_scale(int l) { return std::sqrt(2.0 / (static_cast<double>(l) * (l + 1))); }

}  // namespace

double stokes_constant(int n) {
  require_dim(n);
  return std::sqrt(static_cast<double>(n) / (2.0 * (n - 1)));
}

GellMannBasis::GellMannBasis(int n) : n_(n) {
  require_dim(n);
  generators_.reserve(stokes_dim(n));
  for (int pass = 0; pass < 2; ++pass) {
    const Kind kind = pass == 0 ? Kind::kSymmetric : Kind::kAntisymmetric;
    for (int j = 0; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) generators_.push_back({kind, j, k});
    }
  }
  for (int l = 1; l < n; ++l) generators_.push_back({Kind::kDiagonal, l, 0});

  const cplx i_unit(0.0, 1.0);
  matrices_.reserve(generators_.size());
  for (const auto& g : generators_) {
    CMatrix m = CMatrix::Zero(n, n);
    switch (g.kind) {
      case Kind::kSymmetric:
        m(g.j, g.k) = 1.0;
        m(g.k, g.j) = 1.0;
        break;
      case Kind::kAntisymmetric:
        m(g.j, g.k) = -i_unit;
        m(g.k, g.j) = i_unit;
        break;
      case Kind::kDiagonal: {
        const double c = ladder_scale(g.j);
        for (int d = 0; d < g.j; ++d) m(d, d) = c;
        m(g.j, g.j) = -c * g.j;
        break;
      }
    }
    matrices_.push_back(std::move(m));
  }
}

CMatrix GellMannBasis::combine(const CVector& coeffs) const {
  require_same(static_cast<int>(coeffs.size()), size(), "GellMannBasis::combine");
  CMatrix out = CMatrix::Zero(n_, n_);
  for (int i = 0; i < size(); ++i) out += coeffs[i] * matrices_[i];
  return out;
}

CMatrix GellMannBasis::combine(const RVector& coeffs) const {
  return combine(CVector(coeffs.cast<cplx>()));
}

GellMannBasis gell_mann_basis(int n) { return GellMannBasis(n); }

JonesState::JonesState(CVector amplitudes) : amplitudes_(std::move(amplitudes)) {
  require_dim(static_cast<int>(amplitudes_.size()));
  const double norm = amplitudes_.norm();
  if (!(std::abs(norm - 1.0) <= 1e-12)) {
    throw InvalidDimension("Jones state is not unit-norm (norm = " + std::to_string(norm) + ")");
  }
}

JonesState JonesState::normalized(const CVector& raw) {
  const double norm = raw.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw InvalidDimension("cannot normalize a zero or non-finite Jones vector");
  }
  return JonesState(raw / norm);
}

JonesState JonesState::basis(int n, int index) {
  require_dim(n);
  if (index < 0 || index >= n) throw InvalidDimension("eigenmode index out of range");
  CVector v = CVector::Zero(n);
  v[index] = 1.0;
  return JonesState(std::move(v));
}

StokesVector jones_to_stokes(const JonesState& s, const GellMannBasis& basis) {
  require_same(s.dim(), basis.n(), "jones_to_stokes");
  const double cn = stokes_constant(basis.n());
  RVector out(basis.size());
  const CVector& a = s.amplitudes();
  for (int i = 0; i < basis.size(); ++i) {
    out[i] = cn * a.dot(basis.matrix(i) * a).real();
  }
  return StokesVector(std::move(out));
}

RVector stokes_components(const CVector& a) {
  const int n = static_cast<int>(a.size());
  require_dim(n);
  const double cn = stokes_constant(n);
  const int pairs = n * (n - 1) / 2;
  RVector out(stokes_dim(n));
  int idx = 0;
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k, ++idx) {
      const cplx z = std::conj(a[j]) * a[k];
      out[idx] = 2.0 * cn * z.real();
      out[idx + pairs] = 2.0 * cn * z.imag();
    }
  }
  idx = 2 * pairs;
  double partial = 0.0;
  for (int l = 1; l < n; ++l) {
    partial += std::norm(a[l - 1]);
    out[idx++] = cn * ladder_scale(l) * (partial - l * std::norm(a[l]));
  }
  return out;
}

double stokes_dot_from_jones(const JonesState& a, const JonesState& b) {
  require_same(a.dim(), b.dim(), "stokes_dot_from_jones");
  const int n = a.dim();
  const double cn = stokes_constant(n);
  return 2.0 * cn * cn * (std::norm(a.amplitudes().dot(b.amplitudes())) - 1.0 / n);
}

CMatrix projection_operator(const JonesState& s, const GellMannBasis& basis) {
  const StokesVector hat = jones_to_stokes(s, basis);
  const int n = basis.n();
  const double cn = stokes_constant(n);
  CMatrix out = CMatrix::Identity(n, n) / static_cast<double>(n);
  out += basis.combine(hat.components()) / (2.0 * cn);
  return out;
}

HermitianExpansion expand_matrix(const CMatrix& m, const GellMannBasis& basis) {
  require_same(static_cast<int>(m.rows()), basis.n(), "expand_matrix");
  require_same(static_cast<int>(m.cols()), basis.n(), "expand_matrix");
  const int n = basis.n();
  const double cn = stokes_constant(n);
  HermitianExpansion e;
  e.scalar_part = m.trace() / static_cast<double>(n);
  e.vector_part.resize(basis.size());
  for (int i = 0; i < basis.size(); ++i) {
    // Tr(M L_i) = sum_ab M_ab (L_i)_ba
    e.vector_part[i] = cn * m.cwiseProduct(basis.matrix(i).transpose()).sum();
  }
  return e;
}

CMatrix assemble(const HermitianExpansion& e, const GellMannBasis& basis) {
  const int n = basis.n();
  CMatrix out = e.scalar_part * CMatrix::Identity(n, n);
  out += basis.combine(e.vector_part) / (2.0 * stokes_constant(n));
  return out;
}

namespace {

void require_angles(const HypersphericalPoint& p) {
  if (p.phis.size() != p.thetas.size() || p.phis.size() < 1) {
    throw InvalidDimension("hyperspherical point needs N-1 polar and N-1 phase angles");
  }
}

}  // namespace

JonesState hyperspherical_to_jones(const HypersphericalPoint& p) {
  require_angles(p);
  const int n = p.dim();
  CVector a(n);
  double sin_prod = 1.0;
  for (int k = 0; k < n - 1; ++k) {
    const cplx phase = k == 0 ? cplx(1.0) : std::polar(1.0, p.thetas[k - 1]);
    a[k] = sin_prod * std::cos(p.phis[k]) * phase;
    sin_prod *= std::sin(p.phis[k]);
  }
  a[n - 1] = sin_prod * std::polar(1.0, p.thetas[n - 2]);
  // The parameterization is unit-norm analytically; absorb rounding.
  return JonesState(a / a.norm());
}

CVector d_jones_d_angle(const HypersphericalPoint& p, AngleIndex which) {
  require_angles(p);
  const int n = p.dim();
  if (which.index < 0 || which.index > n - 2) throw InvalidDimension("angle index out of range");
  CVector d = CVector::Zero(n);

  if (which.kind == AngleIndex::Kind::kTheta) {
    const int k = which.index + 1;
    double mag = 1.0;
    for (int m = 0; m < std::min(k, n - 1); ++m) mag *= std::sin(p.phis[m]);
    if (k < n - 1) mag *= std::cos(p.phis[k]);
    d[k] = cplx(0.0, 1.0) * mag * std::polar(1.0, p.thetas[which.index]);
    return d;
  }

  const int j = which.index;
  for (int k = j; k < n; ++k) {
    double mag = 1.0;
    const int sin_count = std::min(k, n - 1);
    for (int m = 0; m < sin_count; ++m) {
      mag *= (m == j) ? std::cos(p.phis[m]) : std::sin(p.phis[m]);
    }
    if (k < n - 1) mag *= (k == j) ? -std::sin(p.phis[k]) : std::cos(p.phis[k]);
    const cplx phase = k == 0 ? cplx(1.0) : std::polar(1.0, p.thetas[k - 1]);
    d[k] = mag * phase;
  }
  return d;
}

HypersphericalPoint jones_to_hyperspherical(const JonesState& s) {
  const int n = s.dim();
  const CVector& a = s.amplitudes();
  const double ref = std::abs(a[0]) > 0.0 ? std::arg(a[0]) : 0.0;
  const CVector r = a * std::polar(1.0, -ref);

  RVector tail(n + 1);
  tail[n] = 0.0;
  for (int k = n - 1; k >= 0; --k) tail[k] = std::hypot(tail[k + 1], std::abs(r[k]));

  HypersphericalPoint p{RVector(n - 1), RVector(n - 1)};
  for (int k = 0; k < n - 1; ++k) p.phis[k] = std::atan2(tail[k + 1], std::abs(r[k]));
  for (int k = 1; k < n; ++k) p.thetas[k - 1] = std::arg(r[k]);
  return p;
}

}  // namespace stokesopt
