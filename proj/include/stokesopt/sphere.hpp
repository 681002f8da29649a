#pragma once

// Product-of-spheres helpers shared by the launch-set optimizer and the SIC
// search. A point is an N x K matrix whose columns are unit vectors.

#include "stokesopt/stokes_core.hpp"

namespace stokesopt::sphere {

void normalize_columns(CMatrix& x);

/// Removes the component of each column of `g` normal to the matching
/// sphere: g_k -= Re<x_k|g_k> x_k.
void project_tangent(const CMatrix& x, CMatrix& g);

/// Step of length t against `direction`, then renormalize every column.
CMatrix retract(const CMatrix& x, const CMatrix& direction, double t);

/// normalize(x + t p) - x for a tangent direction p, evaluated without
/// subtracting nearly equal matrices.
CMatrix retraction_displacement(const CMatrix& x, const CMatrix& p, double t);

/// max_k | ||x_k|| - 1 |
double max_norm_deviation(const CMatrix& x);

/// Rotates each column so its largest-magnitude component is real and
/// non-negative (ties broken by the lowest index).
void canonical_phase(CMatrix& x);

}  // namespace stokesopt::sphere
