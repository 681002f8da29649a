#include "stokesopt/rng.hpp"

#include <cmath>

namespace stokesopt {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng substream(std::uint64_t seed, std::uint64_t stream) { return Rng(mix_seed(seed, stream)); }

CVector complex_gaussian(int n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CVector v(n);
  for (int i = 0; i < n; ++i) {
    const double re = g(rng);
    const double im = g(rng);
    v[i] = cplx(re, im);
  }
  return v;
}

CMatrix haar_unitary(int n, Rng& rng) {
  CMatrix z(n, n);
  for (int c = 0; c < n; ++c) z.col(c) = complex_gaussian(n, rng);
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int c = 0; c < n; ++c) {
    const double mag = std::abs(r(c, c));
    if (mag > 0.0) q.col(c) *= r(c, c) / mag;
  }
  return q;
}

JonesState random_jones(int n, Rng& rng) { return JonesState::normalized(complex_gaussian(n, rng)); }

}  // namespace stokesopt
