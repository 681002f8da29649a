#pragma once

// Generalized Stokes-space algebra: Gell-Mann basis, Jones <-> Stokes maps,
// identity + Gell-Mann expansion of arbitrary square matrices, and the
// hyperspherical parameterization of unit Jones vectors.

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace stokesopt {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Normalization constant C_N = sqrt(N / (2(N-1))) tying the Gell-Mann
/// expansion of a projector to a unit Stokes vector.
double stokes_constant(int n);

/// Number of generalized Stokes components, N^2 - 1.
inline int stokes_dim(int n) { return n * n - 1; }

/// Ordered generalized Gell-Mann matrices for C^N.
///
/// Ordering is frozen: symmetric E_jk + E_kj for j < k in lexicographic
/// order, then antisymmetric -i(E_jk - E_kj) in the same order, then the
/// N - 1 diagonal ladder matrices. Every matrix is Hermitian, traceless and
/// Tr(L_i L_j) = 2 delta_ij. For N = 2 this is (sigma_1, sigma_2, sigma_3).
class GellMannBasis {
 public:
  enum class Kind { kSymmetric, kAntisymmetric, kDiagonal };

  // (j, k) are zero-based mode indices for the off-diagonal kinds; for the
  // diagonal kind j holds the ladder level l in 1..N-1 and k is unused.
  struct Generator {
    Kind kind;
    int j;
    int k;
  };

  explicit GellMannBasis(int n);

  int n() const { return n_; }
  int size() const { return static_cast<int>(generators_.size()); }
  const Generator& generator(int i) const { return generators_[i]; }
  const CMatrix& matrix(int i) const { return matrices_[i]; }
  const std::vector<CMatrix>& matrices() const { return matrices_; }

  /// sum_i v_i L_i for a real or complex coefficient vector.
  CMatrix combine(const CVector& coeffs) const;
  CMatrix combine(const RVector& coeffs) const;

 private:
  int n_;
  std::vector<Generator> generators_;
  std::vector<CMatrix> matrices_;
};

GellMannBasis gell_mann_basis(int n);

/// Unit complex N-vector (a launch state / mode combination).
class JonesState {
 public:
  /// Takes ownership of already-normalized amplitudes; throws
  /// InvalidDimension when the norm deviates from 1 by more than 1e-12 or
  /// the dimension is below 2.
  explicit JonesState(CVector amplitudes);

  /// Normalizes the given (non-zero) vector.
  static JonesState normalized(const CVector& raw);

  /// Unit vector along eigenmode `index` of C^n.
  static JonesState basis(int n, int index);

  int dim() const { return static_cast<int>(amplitudes_.size()); }
  const CVector& amplitudes() const { return amplitudes_; }
  cplx operator[](int i) const { return amplitudes_[i]; }

 private:
  CVector amplitudes_;
};

/// Real (N^2 - 1)-vector; the image of a JonesState is a unit vector.
class StokesVector {
 public:
  StokesVector() = default;
  explicit StokesVector(RVector components) : components_(std::move(components)) {}

  int size() const { return static_cast<int>(components_.size()); }
  const RVector& components() const { return components_; }
  double operator[](int i) const { return components_[i]; }
  double dot(const StokesVector& other) const { return components_.dot(other.components_); }
  double norm() const { return components_.norm(); }

 private:
  RVector components_;
};

/// Component i is C_N <s|L_i|s>, evaluated with the dense basis matrices.
StokesVector jones_to_stokes(const JonesState& s, const GellMannBasis& basis);

/// Same map, evaluated from the sparse structure of the frozen ordering
/// without materializing the basis. O(N^2) per state.
RVector stokes_components(const CVector& amplitudes);

/// Stokes dot product from the Jones overlap: 2 C_N^2 (|<a|b>|^2 - 1/N).
double stokes_dot_from_jones(const JonesState& a, const JonesState& b);

/// |s><s| rebuilt as I/N + (1/(2 C_N)) s_hat . L.
CMatrix projection_operator(const JonesState& s, const GellMannBasis& basis);

/// M = scalar_part * I + (1/(2 C_N)) vector_part . L. Complex coefficients
/// cover non-Hermitian operators.
struct HermitianExpansion {
  cplx scalar_part;
  CVector vector_part;
};

HermitianExpansion expand_matrix(const CMatrix& m, const GellMannBasis& basis);
CMatrix assemble(const HermitianExpansion& e, const GellMannBasis& basis);

/// 2N - 2 angles parameterizing a unit vector in C^N:
/// (cos phi_1, sin phi_1 cos phi_2 e^{i theta_1}, ...,
///  sin phi_1 ... sin phi_{N-1} e^{i theta_{N-1}}).
struct HypersphericalPoint {
  RVector phis;    // N - 1 polar angles
  RVector thetas;  // N - 1 phase angles

  int dim() const { return static_cast<int>(phis.size()) + 1; }
};

struct AngleIndex {
  enum class Kind { kPhi, kTheta };
  Kind kind;
  int index;  // zero-based, 0..N-2
};

JonesState hyperspherical_to_jones(const HypersphericalPoint& p);

/// Exact partial derivative of every amplitude with respect to one angle.
CVector d_jones_d_angle(const HypersphericalPoint& p, AngleIndex which);

/// Inverse map up to global phase: returns angles whose image equals
/// `s` multiplied by the phase that makes its first amplitude real >= 0.
HypersphericalPoint jones_to_hyperspherical(const JonesState& s);

}  // namespace stokesopt
