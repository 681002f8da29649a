#pragma once

// Data-parallel inner loops. Each kernel has a plain serial reference
// (`*_serial`) kept for testing and benchmarking; the unsuffixed variant
// splits the outer loop across OpenMP threads. Every output element is
// accumulated in the same order in both variants, so results are bitwise
// identical regardless of the thread count.
//
// `states` always holds one unit Jones vector per column (N x K).

#include "stokesopt/stokes_core.hpp"

namespace stokesopt::kernels {

/// Jones overlaps O_jk = <s_j|s_k> (K x K, Hermitian).
CMatrix overlaps_serial(const CMatrix& states);
CMatrix overlaps(const CMatrix& states);

/// Gram matrix of the Stokes images from overlaps only:
/// G_jk = 2 C_N^2 (|<s_j|s_k>|^2 - 1/N).
RMatrix stokes_gram_serial(const CMatrix& states);
RMatrix stokes_gram(const CMatrix& states);

/// Jones-space gradient of xi = Tr(G^-1) given W = G^-2 and the overlaps:
/// column k is -8 C_N^2 sum_j W_jk <s_j|s_k> |s_j>, the complex vector whose
/// real pairing Re<g_k|ds_k> reproduces d(xi). The part normal to the unit
/// spheres is not removed here.
CMatrix xi_gradient_serial(const CMatrix& states, const CMatrix& overlaps, const RMatrix& w);
CMatrix xi_gradient(const CMatrix& states, const CMatrix& overlaps, const RMatrix& w);

/// Frame potential sum_{i != j} |<s_i|s_j>|^4 and (optionally) its Jones-space
/// gradient 8 sum_{j != k} |<s_j|s_k>|^2 <s_j|s_k> |s_j>.
double frame_potential_serial(const CMatrix& states, CMatrix* gradient);
double frame_potential(const CMatrix& states, CMatrix* gradient);

/// Change of the norm-scaled squared overlaps |<a_i|a_j>|^2 / (|a_i|^2 |a_j|^2)
/// when the columns move from `states` to `states + step`, formed from
/// overlap differences so it stays accurate far below the rounding level of
/// the overlaps themselves. The norm scaling makes the result insensitive to
/// rounding-level radial components of `step`. The diagonal is zero.
RMatrix squared_overlap_change_serial(const CMatrix& states, const CMatrix& overlaps,
                                      const CMatrix& step);
RMatrix squared_overlap_change(const CMatrix& states, const CMatrix& overlaps, const CMatrix& step);

/// Problem size above which the OpenMP variants actually fork.
inline constexpr int kParallelThreshold = 48;

}  // namespace stokesopt::kernels
