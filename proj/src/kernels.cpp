#include "stokesopt/kernels.hpp"

#include <omp.h>

namespace stokesopt::kernels {

namespace {

// <a|b> with a fixed left-to-right accumulation order.
inline cplx inner(const CMatrix& states, int a, int b) {
  cplx acc(0.0, 0.0);
  const int n = static_cast<int>(states.rows());
  for (int v = 0; v < n; ++v) acc += std::conj(states(v, a)) * states(v, b);
  return acc;
}

inline void overlap_column(const CMatrix& states, int k, CMatrix& out) {
  for (int j = 0; j <= k; ++j) {
    const cplx z = inner(states, j, k);
    out(j, k) = z;
    out(k, j) = std::conj(z);
  }
}

inline void gram_column(const CMatrix& states, int k, double scale, double offset, RMatrix& out) {
  for (int j = 0; j <= k; ++j) {
    const double g = scale * (std::norm(inner(states, j, k)) - offset);
    out(j, k) = g;
    out(k, j) = g;
  }
  out(k, k) = scale * (std::norm(inner(states, k, k)) - offset);
}

inline void xi_gradient_column(const CMatrix& states, const CMatrix& ov, const RMatrix& w, int k,
                               double scale, CMatrix& out) {
  const int n = static_cast<int>(states.rows());
  const int count = static_cast<int>(states.cols());
  for (int v = 0; v < n; ++v) out(v, k) = 0.0;
  for (int j = 0; j < count; ++j) {
    const cplx c = w(j, k) * ov(j, k);
    for (int v = 0; v < n; ++v) out(v, k) += c * states(v, j);
  }
  for (int v = 0; v < n; ++v) out(v, k) *= -scale;
}

inline double frame_column(const CMatrix& states, const CMatrix& ov, int k, CMatrix* gradient) {
  const int n = static_cast<int>(states.rows());
  const int count = static_cast<int>(states.cols());
  double partial = 0.0;
  if (gradient != nullptr) {
    for (int v = 0; v < n; ++v) (*gradient)(v, k) = 0.0;
  }
  for (int j = 0; j < count; ++j) {
    if (j == k) continue;
    const double p = std::norm(ov(j, k));
    partial += p * p;
    if (gradient != nullptr) {
      const cplx c = 8.0 * p * ov(j, k);
      for (int v = 0; v < n; ++v) (*gradient)(v, k) += c * states(v, j);
    }
  }
  return partial;
}

// Column k of the squared-overlap change; `cross` holds <a_i|d_j>.
inline void overlap_change_column(const CMatrix& states, const CMatrix& ov, const CMatrix& step,
                                  const CMatrix& cross, int k, RMatrix& out) {
  const int count = static_cast<int>(states.cols());
  const double nk = ov(k, k).real();
  const double dnk = 2.0 * cross(k, k).real() + inner(step, k, k).real();
  for (int i = 0; i < count; ++i) {
    if (i == k) {
      out(i, k) = 0.0;
      continue;
    }
    const double ni = ov(i, i).real();
    const double dni = 2.0 * cross(i, i).real() + inner(step, i, i).real();
    const cplx dov = cross(i, k) + std::conj(cross(k, i)) + inner(step, i, k);
    const double norms = ni * nk;
    const double norms_new = (ni + dni) * (nk + dnk);
    const double dnorms = dni * nk + ni * dnk + dni * dnk;
    const double sq = std::norm(ov(i, k));
    const double dsq = 2.0 * (std::conj(ov(i, k)) * dov).real() + std::norm(dov);
    out(i, k) = (dsq * norms - sq * dnorms) / (norms * norms_new);
  }
}

inline cplx cross_inner(const CMatrix& a, int i, const CMatrix& b, int j) {
  cplx acc(0.0, 0.0);
  const int n = static_cast<int>(a.rows());
  for (int v = 0; v < n; ++v) acc += std::conj(a(v, i)) * b(v, j);
  return acc;
}

double gram_scale(const CMatrix& states) {
  const double cn = stokes_constant(static_cast<int>(states.rows()));
  return 2.0 * cn * cn;
}

}  // namespace

CMatrix overlaps_serial(const CMatrix& states) {
  const int count = static_cast<int>(states.cols());
  CMatrix out(count, count);
  for (int k = 0; k < count; ++k) overlap_column(states, k, out);
  return out;
}

CMatrix overlaps(const CMatrix& states) {
  const int count = static_cast<int>(states.cols());
  CMatrix out(count, count);
#pragma omp parallel for schedule(dynamic, 8) if (count > kParallelThreshold)
  for (int k = 0; k < count; ++k) overlap_column(states, k, out);
  return out;
}

RMatrix stokes_gram_serial(const CMatrix& states) {
  const int count = static_cast<int>(states.cols());
  const double scale = gram_scale(states);
  const double offset = 1.0 / static_cast<double>(states.rows());
  RMatrix out(count, count);
  for (int k = 0; k < count; ++k) gram_column(states, k, scale, offset, out);
  return out;
}

RMatrix stokes_gram(const CMatrix& states) {
  const int count = static_cast<int>(states.cols());
  const double scale = gram_scale(states);
  const double offset = 1.0 / static_cast<double>(states.rows());
  RMatrix out(count, count);
#pragma omp parallel for schedule(dynamic, 8) if (count > kParallelThreshold)
  for (int k = 0; k < count; ++k) gram_column(states, k, scale, offset, out);
  return out;
}

CMatrix xi_gradient_serial(const CMatrix& states, const CMatrix& ov, const RMatrix& w) {
  const int count = static_cast<int>(states.cols());
  const double scale = 4.0 * gram_scale(states);
  CMatrix out(states.rows(), count);
  for (int k = 0; k < count; ++k) xi_gradient_column(states, ov, w, k, scale, out);
  return out;
}

CMatrix xi_gradient(const CMatrix& states, const CMatrix& ov, const RMatrix& w) {
  const int count = static_cast<int>(states.cols());
  const double scale = 4.0 * gram_scale(states);
  CMatrix out(states.rows(), count);
#pragma omp parallel for schedule(static) if (count > kParallelThreshold)
  for (int k = 0; k < count; ++k) xi_gradient_column(states, ov, w, k, scale, out);
  return out;
}

double frame_potential_serial(const CMatrix& states, CMatrix* gradient) {
  const int count = static_cast<int>(states.cols());
  const CMatrix ov = overlaps_serial(states);
  if (gradient != nullptr) gradient->resize(states.rows(), count);
  double total = 0.0;
  for (int k = 0; k < count; ++k) total += frame_column(states, ov, k, gradient);
  return total;
}

double frame_potential(const CMatrix& states, CMatrix* gradient) {
  const int count = static_cast<int>(states.cols());
  const CMatrix ov = overlaps(states);
  if (gradient != nullptr) gradient->resize(states.rows(), count);
  // Per-column partials are reduced in index order to keep the sum identical
  // to the serial reference.
  RVector partials(count);
#pragma omp parallel for schedule(static) if (count > kParallelThreshold)
  for (int k = 0; k < count; ++k) partials[k] = frame_column(states, ov, k, gradient);
  double total = 0.0;
  for (int k = 0; k < count; ++k) total += partials[k];
  return total;
}

RMatrix squared_overlap_change_serial(const CMatrix& states, const CMatrix& ov, const CMatrix& step) {
  const int count = static_cast<int>(states.cols());
  CMatrix cross(count, count);
  for (int j = 0; j < count; ++j) {
    for (int i = 0; i < count; ++i) cross(i, j) = cross_inner(states, i, step, j);
  }
  RMatrix out(count, count);
  for (int k = 0; k < count; ++k) overlap_change_column(states, ov, step, cross, k, out);
  return out;
}

RMatrix squared_overlap_change(const CMatrix& states, const CMatrix& ov, const CMatrix& step) {
  const int count = static_cast<int>(states.cols());
  CMatrix cross(count, count);
#pragma omp parallel for schedule(static) if (count > kParallelThreshold)
  for (int j = 0; j < count; ++j) {
    for (int i = 0; i < count; ++i) cross(i, j) = cross_inner(states, i, step, j);
  }
  RMatrix out(count, count);
#pragma omp parallel for schedule(static) if (count > kParallelThreshold)
  for (int k = 0; k < count; ++k) overlap_change_column(states, ov, step, cross, k, out);
  return out;
}

}  // namespace stokesopt::kernels
