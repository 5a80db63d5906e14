#include "qthermo/operator_algebra.hpp"

#include <cmath>

namespace qthermo {

double max_abs(const ComplexSquareMatrix& m) {
  return m.cwiseAbs().maxCoeff();
}

namespace {

void require_square_finite(const ComplexSquareMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw dimension_error(std::string(what) + ": matrix must be square and nonempty");
  }
  if (!m.allFinite()) {
    throw error(std::string(what) + ": matrix has non-finite entries");
  }
}

double hermiticity_defect(const ComplexSquareMatrix& m) {
  return max_abs(m - m.adjoint());
}

ComplexSquareMatrix symmetrize(const ComplexSquareMatrix& m) {
  return 0.5 * (m + m.adjoint());
}

// Closed-form eigensystem for a Hermitian 2x2, exact enough for the tight
// residual windows and much cheaper than the iterative solver in the
// million-step schedules.
Eigensystem eigensystem_2x2(const ComplexSquareMatrix& m) {
  const double a = m(0, 0).real();
  const double d = m(1, 1).real();
  const Complex b = m(0, 1);
  const double babs = std::abs(b);

  Eigensystem out;
  out.values.resize(2);
  out.vectors.resize(2, 2);

  if (babs < 1e-300) {
    if (a <= d) {
      out.values << a, d;
      out.vectors << Complex(1, 0), Complex(0, 0), Complex(0, 0), Complex(1, 0);
    } else {
      out.values << d, a;
      out.vectors << Complex(0, 0), Complex(1, 0), Complex(1, 0), Complex(0, 0);
    }
    return out;
  }

  const double mid = 0.5 * (a + d);
  const double half = std::hypot(0.5 * (a - d), babs);
  const double lo = mid - half;
  const double hi = mid + half;
  out.values << lo, hi;

  // (b, lambda - a) solves (H - lambda I) v = 0 whenever b != 0.
  Eigen::Vector2cd v0(b, Complex(lo - a, 0.0));
  v0.normalize();
  // Orthonormal complement of (x, y) is (-conj(y), conj(x)).
  Eigen::Vector2cd v1(-std::conj(v0(1)), std::conj(v0(0)));
  out.vectors.col(0) = v0;
  out.vectors.col(1) = v1;
  return out;
}

}  // namespace

HermitianOperator::HermitianOperator(ComplexSquareMatrix m) {
  require_square_finite(m, "HermitianOperator");
  if (hermiticity_defect(m) > hermiticity_tol) {
    throw not_hermitian_error("HermitianOperator: matrix is not Hermitian within tolerance");
  }
  m_ = symmetrize(m);
}

DensityOperator::DensityOperator(const ComplexSquareMatrix& m, unchecked_tag) {
  require_square_finite(m, "DensityOperator");
  m_ = symmetrize(m);
  if (std::abs(m_.trace().real() - 1.0) > trace_one_tol ||
      std::abs(m_.trace().imag()) > trace_one_tol) {
    throw trace_error("DensityOperator: trace is not 1 within tolerance");
  }
}

DensityOperator::DensityOperator(const ComplexSquareMatrix& m) {
  require_square_finite(m, "DensityOperator");
  if (hermiticity_defect(m) > hermiticity_tol) {
    throw not_hermitian_error("DensityOperator: matrix is not Hermitian within tolerance");
  }
  ComplexSquareMatrix sym = symmetrize(m);
  Eigensystem es = hermitian_eigensystem(sym);
  if (es.values.minCoeff() < -psd_tol) {
    throw not_psd_error("DensityOperator: negative eigenvalue beyond tolerance");
  }
  if (std::abs(sym.trace().real() - 1.0) > trace_one_tol) {
    throw trace_error("DensityOperator: trace is not 1 within tolerance");
  }
  m_ = std::move(sym);
}

DensityOperator DensityOperator::unchecked(const ComplexSquareMatrix& m) {
  return DensityOperator(m, unchecked_tag{});
}

BipartiteDensityOperator::BipartiteDensityOperator(DensityOperator state, int d_S, int d_A)
    : state_(std::move(state)), d_S_(d_S), d_A_(d_A) {
  if (d_S_ <= 0 || d_A_ <= 0 ||
      state_.dim() != static_cast<Eigen::Index>(d_S_) * d_A_) {
    throw dimension_error("BipartiteDensityOperator: dim must factor as d_S * d_A");
  }
}

ComplexSquareMatrix tensor_product(const ComplexSquareMatrix& a,
                                   const ComplexSquareMatrix& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols()) {
    throw dimension_error("tensor_product: both factors must be square");
  }
  const Eigen::Index da = a.rows();
  const Eigen::Index db = b.rows();
  ComplexSquareMatrix out(da * db, da * db);
  for (Eigen::Index i = 0; i < da; ++i) {
    for (Eigen::Index j = 0; j < da; ++j) {
      out.block(i * db, j * db, db, db) = a(i, j) * b;
    }
  }
  return out;
}

ComplexSquareMatrix partial_trace_matrix(const ComplexSquareMatrix& m,
                                         int d_S, int d_A, Subsystem over) {
  if (m.rows() != static_cast<Eigen::Index>(d_S) * d_A || m.rows() != m.cols()) {
    throw dimension_error("partial_trace: matrix dim does not match d_S * d_A");
  }
  if (over == Subsystem::A) {
    ComplexSquareMatrix out = ComplexSquareMatrix::Zero(d_S, d_S);
    for (int s = 0; s < d_S; ++s) {
      for (int t = 0; t < d_S; ++t) {
        Complex acc(0, 0);
        for (int a = 0; a < d_A; ++a) {
          acc += m(s * d_A + a, t * d_A + a);
        }
        out(s, t) = acc;
      }
    }
    return out;
  }
  ComplexSquareMatrix out = ComplexSquareMatrix::Zero(d_A, d_A);
  for (int a = 0; a < d_A; ++a) {
    for (int b = 0; b < d_A; ++b) {
      Complex acc(0, 0);
      for (int s = 0; s < d_S; ++s) {
        acc += m(s * d_A + a, s * d_A + b);
      }
      out(a, b) = acc;
    }
  }
  return out;
}

DensityOperator partial_trace(const BipartiteDensityOperator& rho, Subsystem over) {
  return DensityOperator::unchecked(
      partial_trace_matrix(rho.matrix(), rho.d_S(), rho.d_A(), over));
}

Eigensystem hermitian_eigensystem(const ComplexSquareMatrix& m) {
  require_square_finite(m, "hermitian_eigensystem");
  ComplexSquareMatrix sym = symmetrize(m);
  if (sym.rows() == 1) {
    Eigensystem out;
    out.values.resize(1);
    out.values << sym(0, 0).real();
    out.vectors = ComplexSquareMatrix::Identity(1, 1);
    return out;
  }
  if (sym.rows() == 2) {
    return eigensystem_2x2(sym);
  }
  Eigen::SelfAdjointEigenSolver<ComplexSquareMatrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw error("hermitian_eigensystem: eigensolver failed to converge");
  }
  return Eigensystem{solver.eigenvalues(), solver.eigenvectors()};
}

Eigensystem hermitian_eigensystem(const HermitianOperator& h) {
  return hermitian_eigensystem(h.matrix());
}

HermitianOperator matrix_function(const HermitianOperator& h,
                                  const std::function<double(double)>& f) {
  Eigensystem es = hermitian_eigensystem(h);
  Eigen::VectorXd mapped(es.values.size());
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    const double y = f(es.values(i));
    if (!std::isfinite(y)) {
      throw func_domain_error("matrix_function: f is not finite on eigenvalue " +
                              std::to_string(es.values(i)));
    }
    mapped(i) = y;
  }
  ComplexSquareMatrix out = es.vectors * mapped.asDiagonal() * es.vectors.adjoint();
  return HermitianOperator(std::move(out));
}

DensityOperator validate_density(const ComplexSquareMatrix& m) {
  return DensityOperator(m);
}

double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
  if (rho.dim() != sigma.dim()) {
    throw dimension_error("trace_distance: dimension mismatch");
  }
  Eigensystem es = hermitian_eigensystem(rho.matrix() - sigma.matrix());
  return 0.5 * es.values.cwiseAbs().sum();
}

}  // namespace qthermo
