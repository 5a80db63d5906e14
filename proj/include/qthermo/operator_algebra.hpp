#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qthermo {

using Complex = std::complex<double>;

// Dense complex square matrix, row-major logical indexing. Dimensions here
// stay small (~16), so dynamic Eigen storage is the whole substrate.
using ComplexSquareMatrix = Eigen::MatrixXcd;

// Shared numeric tolerances.
inline constexpr double hermiticity_tol = 1e-10;
inline constexpr double psd_tol = 1e-10;
inline constexpr double trace_one_tol = 1e-10;
// Identities that are plain floating-point algebra.
inline constexpr double algebraic_tol = 1e-9;
// Identities routed through the measurement-basis optimizer.
inline constexpr double search_tol = 1e-6;
// Eigenvalues below this count as null space.
inline constexpr double kernel_cutoff = 1e-14;
// Measurement outcomes at or below this probability are flagged null.
inline constexpr double null_outcome_tol = 1e-12;

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct not_hermitian_error : error {
  using error::error;
};
struct not_psd_error : error {
  using error::error;
};
struct trace_error : error {
  using error::error;
};
struct dimension_error : error {
  using error::error;
};
// matrix_function: f undefined (non-finite) on an eigenvalue.
struct func_domain_error : error {
  using error::error;
};

// Entrywise max-abs norm.
double max_abs(const ComplexSquareMatrix& m);

// Hermitian matrix in energy units when used as a Hamiltonian. The
// constructor rejects inputs with ||M - M^dagger||_max above tolerance and
// stores the symmetrized (M + M^dagger)/2 to keep float drift out of
// downstream eigensolves.
class HermitianOperator {
 public:
  explicit HermitianOperator(ComplexSquareMatrix m);

  const ComplexSquareMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  ComplexSquareMatrix m_;
};

// Unit-trace positive-semidefinite Hermitian matrix.
class DensityOperator {
 public:
  // Validates all three invariants; throws the matching distinct error.
  explicit DensityOperator(const ComplexSquareMatrix& m);

  // Skips the eigenvalue check for matrices that are positive by
  // construction (Gibbs weights, projector sandwiches). Still symmetrizes
  // and checks the trace.
  static DensityOperator unchecked(const ComplexSquareMatrix& m);

  const ComplexSquareMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  struct unchecked_tag {};
  DensityOperator(const ComplexSquareMatrix& m, unchecked_tag);
  ComplexSquareMatrix m_;
};

// Joint state on S x A with the subsystem-S index major:
// joint index = s * d_A + a.
class BipartiteDensityOperator {
 public:
  BipartiteDensityOperator(DensityOperator state, int d_S, int d_A);

  const DensityOperator& state() const { return state_; }
  const ComplexSquareMatrix& matrix() const { return state_.matrix(); }
  int d_S() const { return d_S_; }
  int d_A() const { return d_A_; }

 private:
  DensityOperator state_;
  int d_S_;
  int d_A_;
};

enum class Subsystem { S, A };

struct Eigensystem {
  Eigen::VectorXd values;        // ascending
  ComplexSquareMatrix vectors;   // orthonormal columns, same order
};

// Kronecker product with subsystem-S index major: (a ⊗ b)[(s,a'),(s',b')].
ComplexSquareMatrix tensor_product(const ComplexSquareMatrix& a,
                                   const ComplexSquareMatrix& b);

DensityOperator partial_trace(const BipartiteDensityOperator& rho,
                              Subsystem over);

// Same contraction for matrices that are not density operators
// (unnormalized conditional blocks and similar plumbing).
ComplexSquareMatrix partial_trace_matrix(const ComplexSquareMatrix& m,
                                         int d_S, int d_A, Subsystem over);

Eigensystem hermitian_eigensystem(const HermitianOperator& h);
// Symmetrizes and solves; the caller asserts hermiticity is already checked.
Eigensystem hermitian_eigensystem(const ComplexSquareMatrix& m);

HermitianOperator matrix_function(const HermitianOperator& h,
                                  const std::function<double(double)>& f);

DensityOperator validate_density(const ComplexSquareMatrix& m);

// (1/2)||rho - sigma||_1.
double trace_distance(const DensityOperator& rho, const DensityOperator& sigma);

}  // namespace qthermo
