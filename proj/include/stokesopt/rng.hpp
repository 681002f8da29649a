#pragma once

#include <cstdint>
#include <random>

#include "stokesopt/stokes_core.hpp"

namespace stokesopt {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent substream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Generator for substream `stream` of `seed`. Trial i of a Monte-Carlo run
/// always draws from substream i, independent of thread scheduling.
Rng substream(std::uint64_t seed, std::uint64_t stream);

/// Complex vector with i.i.d. standard complex Gaussian entries.
CVector complex_gaussian(int n, Rng& rng);

/// Haar-distributed unitary (QR of a complex Ginibre matrix, phase-fixed).
CMatrix haar_unitary(int n, Rng& rng);

/// Unit Jones vector uniformly distributed on the sphere of C^n.
JonesState random_jones(int n, Rng& rng);

}  // namespace stokesopt
