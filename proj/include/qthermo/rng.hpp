#pragma once

#include <cstdint>

#include "qthermo/operator_algebra.hpp"

namespace qthermo {

// Hand-rolled splitmix64 + Box-Muller so seeded corpora reproduce bit-exact
// across platforms and standard-library versions.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  // Uniform on [0, 1).
  double uniform();
  // Standard normal.
  double normal();

 private:
  std::uint64_t state_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Decorrelated per-index stream seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

// Matrix with iid complex standard normal entries.
ComplexSquareMatrix ginibre_matrix(int dim, SplitMix64& rng);

// G G^dagger / trace: Hilbert-Schmidt random full-rank state.
DensityOperator random_density(int dim, std::uint64_t seed);

BipartiteDensityOperator random_two_qubit_state(std::uint64_t seed);

// Haar unitary via QR of a Ginibre matrix with phase-fixed R diagonal.
ComplexSquareMatrix random_unitary(int dim, SplitMix64& rng);

HermitianOperator random_hermitian(int dim, std::uint64_t seed);

// sum_k q_k rho_S^(k) x |b_k><b_k| with a Haar-random ancilla basis:
// classical on A, so its discord vanishes.
BipartiteDensityOperator random_classical_quantum(int d_S, int d_A,
                                                  std::uint64_t seed);

}  // namespace qthermo
