#include "qthermo/rng.hpp"

#include <cmath>

namespace qthermo {

std::uint64_t SplitMix64::next() {
  state_ += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) {
    u1 = uniform();
  }
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  SplitMix64 rng(base ^ (0x632BE59BD9B4E019ull * (index + 1)));
  return rng.next();
}

ComplexSquareMatrix ginibre_matrix(int dim, SplitMix64& rng) {
  ComplexSquareMatrix g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      const double re = rng.normal();
      const double im = rng.normal();
      g(i, j) = Complex(re, im) / std::sqrt(2.0);
    }
  }
  return g;
}

DensityOperator random_density(int dim, std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, 0x5157));
  ComplexSquareMatrix g = ginibre_matrix(dim, rng);
  ComplexSquareMatrix m = g * g.adjoint();
  m /= m.trace().real();
  return DensityOperator::unchecked(m);
}

BipartiteDensityOperator random_two_qubit_state(std::uint64_t seed) {
  return BipartiteDensityOperator(random_density(4, seed), 2, 2);
}

ComplexSquareMatrix random_unitary(int dim, SplitMix64& rng) {
  ComplexSquareMatrix g = ginibre_matrix(dim, rng);
  Eigen::HouseholderQR<ComplexSquareMatrix> qr(g);
  ComplexSquareMatrix q = qr.householderQ();
  ComplexSquareMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    const Complex d = r(j, j);
    const double a = std::abs(d);
    q.col(j) *= (a > 0.0 ? d / a : Complex(1, 0));
  }
  return q;
}

HermitianOperator random_hermitian(int dim, std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, 0x484552ull));
  ComplexSquareMatrix g = ginibre_matrix(dim, rng);
  return HermitianOperator(0.5 * (g + g.adjoint()));
}

BipartiteDensityOperator random_classical_quantum(int d_S, int d_A,
                                                  std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, 0x4351));
  Eigen::VectorXd q(d_A);
  double qsum = 0.0;
  for (int k = 0; k < d_A; ++k) {
    q(k) = -std::log(1.0 - rng.uniform());
    qsum += q(k);
  }
  q /= qsum;

  ComplexSquareMatrix basis = random_unitary(d_A, rng);
  ComplexSquareMatrix joint =
      ComplexSquareMatrix::Zero(d_S * d_A, d_S * d_A);
  for (int k = 0; k < d_A; ++k) {
    ComplexSquareMatrix gs = ginibre_matrix(d_S, rng);
    ComplexSquareMatrix block = gs * gs.adjoint();
    block /= block.trace().real();
    const Eigen::VectorXcd b = basis.col(k);
    joint += q(k) * tensor_product(block, b * b.adjoint());
  }
  return BipartiteDensityOperator(DensityOperator::unchecked(joint), d_S, d_A);
}

}  // namespace qthermo
