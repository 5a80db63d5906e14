#include "qthermo/correlations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qthermo/rng.hpp"
#include "qthermo/thermodynamics.hpp"

namespace qthermo {

namespace {

constexpr double two_pi = 2.0 * M_PI;

double entropy_term(double lambda) {
  return lambda > kernel_cutoff ? -lambda * std::log(lambda) : 0.0;
}

// Entropy of a unit-trace Hermitian 2x2 from its determinant alone.
double qubit_entropy_from_det(double det) {
  double disc = 1.0 - 4.0 * det;
  if (disc < 0.0) {
    disc = 0.0;
  }
  const double s = std::sqrt(disc);
  return entropy_term(std::max(0.5 * (1.0 - s), 0.0)) +
         entropy_term(0.5 * (1.0 + s));
}

double entropy_of_unit_trace(const ComplexSquareMatrix& c) {
  if (c.rows() == 2) {
    const double det = (c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0)).real();
    return qubit_entropy_from_det(det);
  }
  Eigensystem es = hermitian_eigensystem(c);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    s += entropy_term(std::max(es.values(i), 0.0));
  }
  return s;
}

// J for a two-outcome ancilla basis given as Bloch angles, any d_S. The
// conditional blocks are partial inner products, no projector matrices are
// formed; this is the hot loop of both the grid and the simplex search.
double J_two_outcome(const ComplexSquareMatrix& rho, int d_S, double s_marginal,
                     double theta, double phi) {
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const Complex e = std::polar(1.0, phi);
  const Complex v[2][2] = {{Complex(c, 0.0), e * s},
                           {Complex(s, 0.0), -e * c}};

  double j = s_marginal;
  ComplexSquareMatrix block(d_S, d_S);
  for (int k = 0; k < 2; ++k) {
    for (int r = 0; r < d_S; ++r) {
      for (int t = 0; t < d_S; ++t) {
        Complex acc(0, 0);
        for (int a = 0; a < 2; ++a) {
          for (int b = 0; b < 2; ++b) {
            acc += std::conj(v[k][a]) * rho(r * 2 + a, t * 2 + b) * v[k][b];
          }
        }
        block(r, t) = acc;
      }
    }
    const double p = block.trace().real();
    if (p <= null_outcome_tol) {
      continue;
    }
    j -= p * entropy_of_unit_trace(block / p);
  }
  return j;
}

// Column-k measurement vectors for general d_A.
ComplexSquareMatrix basis_unitary(const Eigen::VectorXd& params, int d) {
  ComplexSquareMatrix u = ComplexSquareMatrix::Identity(d, d);
  int idx = 0;
  for (int i = 0; i < d - 1; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double c = std::cos(0.5 * params(idx));
      const double s = std::sin(0.5 * params(idx));
      const Complex e = std::polar(1.0, params(idx + 1));
      idx += 2;
      ComplexSquareMatrix g = ComplexSquareMatrix::Identity(d, d);
      g(i, i) = Complex(c, 0.0);
      g(j, j) = Complex(c, 0.0);
      g(j, i) = e * s;
      g(i, j) = -std::conj(e) * s;
      u = u * g;
    }
  }
  return u;
}

double J_given_unitary(const ComplexSquareMatrix& rho, int d_S, int d_A,
                       double s_marginal, const ComplexSquareMatrix& u) {
  double j = s_marginal;
  ComplexSquareMatrix block(d_S, d_S);
  for (int k = 0; k < d_A; ++k) {
    for (int r = 0; r < d_S; ++r) {
      for (int t = 0; t < d_S; ++t) {
        Complex acc(0, 0);
        for (int a = 0; a < d_A; ++a) {
          for (int b = 0; b < d_A; ++b) {
            acc += std::conj(u(a, k)) * rho(r * d_A + a, t * d_A + b) * u(b, k);
          }
        }
        block(r, t) = acc;
      }
    }
    const double p = block.trace().real();
    if (p <= null_outcome_tol) {
      continue;
    }
    j -= p * entropy_of_unit_trace(block / p);
  }
  return j;
}

struct SimplexResult {
  Eigen::VectorXd x;
  double f = 0.0;
};

// Plain Nelder-Mead on an unbounded domain; the objective is periodic in
// every coordinate so no constraints are needed. Deterministic.
template <typename F>
SimplexResult nelder_mead(const F& f, const Eigen::VectorXd& x0, double step,
                          int max_iterations, double f_tol) {
  const int n = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  for (int i = 0; i < n; ++i) {
    xs[i + 1](i) += step;
  }
  for (int i = 0; i <= n; ++i) {
    fs[i] = f(xs[i]);
  }
  std::vector<int> order(n + 1);

  for (int iter = 0; iter < max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fs[a] < fs[b]; });
    const int best = order[0];
    const int worst = order[n];
    const int second = order[n - 1];
    if (fs[worst] - fs[best] < f_tol) {
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i) {
      if (i != worst) {
        centroid += xs[i];
      }
    }
    centroid /= n;

    const Eigen::VectorXd xr = centroid + (centroid - xs[worst]);
    const double fr = f(xr);
    if (fr < fs[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[worst]);
      const double fe = f(xe);
      if (fe < fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
      continue;
    }
    if (fr < fs[second]) {
      xs[worst] = xr;
      fs[worst] = fr;
      continue;
    }
    const bool outside = fr < fs[worst];
    const Eigen::VectorXd xc =
        outside ? centroid + 0.5 * (xr - centroid)
                : centroid + 0.5 * (xs[worst] - centroid);
    const double fc = f(xc);
    if (fc < (outside ? fr : fs[worst])) {
      xs[worst] = xc;
      fs[worst] = fc;
      continue;
    }
    for (int i = 0; i <= n; ++i) {
      if (i == best) {
        continue;
      }
      xs[i] = xs[best] + 0.5 * (xs[i] - xs[best]);
      fs[i] = f(xs[i]);
    }
  }

  int best = 0;
  for (int i = 1; i <= n; ++i) {
    if (fs[i] < fs[best]) {
      best = i;
    }
  }
  return SimplexResult{xs[best], fs[best]};
}

double wrap(double x, double period) {
  double y = std::fmod(x, period);
  if (y < 0.0) {
    y += period;
  }
  return y;
}

// Principal-domain angles for a two-outcome basis. The measurement set is
// invariant under (theta, phi) -> (2 pi - theta, phi + pi) and under the
// outcome swap (theta, phi) -> (pi - theta, phi + pi); both images are
// reduced, the lexicographically smaller one wins.
Eigen::VectorXd canonical_two_outcome(const Eigen::VectorXd& p) {
  auto reduce = [](double theta, double phi) {
    theta = wrap(theta, two_pi);
    if (theta > M_PI) {
      theta = two_pi - theta;
      phi += M_PI;
    }
    Eigen::VectorXd out(2);
    out << theta, wrap(phi, two_pi);
    return out;
  };
  const Eigen::VectorXd a = reduce(p(0), p(1));
  const Eigen::VectorXd b = reduce(M_PI - a(0), a(1) + M_PI);
  if (b(0) < a(0) - 1e-12 ||
      (std::abs(b(0) - a(0)) <= 1e-12 && b(1) < a(1) - 1e-12)) {
    return b;
  }
  return a;
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) < b(i) - 1e-12) {
      return true;
    }
    if (a(i) > b(i) + 1e-12) {
      return false;
    }
  }
  return false;
}

}  // namespace

ProjectiveMeasurement make_measurement(std::vector<ComplexSquareMatrix> projectors,
                                       Eigen::VectorXd parameters) {
  if (projectors.empty()) {
    throw dimension_error("make_measurement: empty projector set");
  }
  const Eigen::Index d = projectors.front().rows();
  ComplexSquareMatrix sum = ComplexSquareMatrix::Zero(d, d);
  for (std::size_t k = 0; k < projectors.size(); ++k) {
    const ComplexSquareMatrix& pk = projectors[k];
    if (pk.rows() != d || pk.cols() != d) {
      throw dimension_error("make_measurement: projector dims disagree");
    }
    if (max_abs(pk * pk - pk) > algebraic_tol) {
      throw error("make_measurement: projector is not idempotent");
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (max_abs(projectors[j] * pk) > algebraic_tol) {
        throw error("make_measurement: projectors are not orthogonal");
      }
    }
    sum += pk;
  }
  if (max_abs(sum - ComplexSquareMatrix::Identity(d, d)) > algebraic_tol) {
    throw error("make_measurement: projectors do not resolve the identity");
  }
  return ProjectiveMeasurement{std::move(projectors), std::move(parameters)};
}

std::pair<double, double> mutual_information_forms(const BipartiteDensityOperator& rho) {
  DensityOperator rs = partial_trace(rho, Subsystem::A);
  DensityOperator ra = partial_trace(rho, Subsystem::S);
  const double entropy_sum = von_neumann_entropy(rs) + von_neumann_entropy(ra) -
                             von_neumann_entropy(rho.state());
  const double rel = relative_entropy(
      rho.state(),
      DensityOperator::unchecked(tensor_product(rs.matrix(), ra.matrix())));
  return {entropy_sum, rel};
}

double mutual_information(const BipartiteDensityOperator& rho) {
  DensityOperator rs = partial_trace(rho, Subsystem::A);
  DensityOperator ra = partial_trace(rho, Subsystem::S);
  return von_neumann_entropy(rs) + von_neumann_entropy(ra) -
         von_neumann_entropy(rho.state());
}

std::vector<MeasurementOutcome> measure_ancilla(const BipartiteDensityOperator& rho,
                                                const ProjectiveMeasurement& m) {
  for (const ComplexSquareMatrix& pk : m.projectors) {
    if (pk.rows() != rho.d_A()) {
      throw dimension_error("measure_ancilla: measurement dim does not match d_A");
    }
  }
  const ComplexSquareMatrix eye_s =
      ComplexSquareMatrix::Identity(rho.d_S(), rho.d_S());
  std::vector<MeasurementOutcome> outcomes;
  outcomes.reserve(m.projectors.size());
  for (std::size_t k = 0; k < m.projectors.size(); ++k) {
    const ComplexSquareMatrix lifted = tensor_product(eye_s, m.projectors[k]);
    const ComplexSquareMatrix sandwich = lifted * rho.matrix() * lifted;
    const double p = sandwich.trace().real();
    MeasurementOutcome out;
    out.k = static_cast<int>(k);
    out.p_k = p;
    if (p > null_outcome_tol) {
      const ComplexSquareMatrix cond =
          partial_trace_matrix(sandwich, rho.d_S(), rho.d_A(), Subsystem::A) / p;
      out.conditional_state = DensityOperator::unchecked(cond);
    }
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

double extracted_information(const BipartiteDensityOperator& rho,
                             const ProjectiveMeasurement& m) {
  DensityOperator rs = partial_trace(rho, Subsystem::A);
  double j = von_neumann_entropy(rs);
  for (const MeasurementOutcome& out : measure_ancilla(rho, m)) {
    if (out.conditional_state) {
      j -= out.p_k * von_neumann_entropy(*out.conditional_state);
    }
  }
  return j;
}

ProjectiveMeasurement parametrize_basis(const Eigen::VectorXd& params, int d_A) {
  if (d_A <= 0) {
    throw dimension_error("parametrize_basis: d_A must be positive");
  }
  if (params.size() != static_cast<Eigen::Index>(d_A) * (d_A - 1)) {
    throw parameter_count_error("parametrize_basis: expected d_A (d_A - 1) parameters");
  }
  const ComplexSquareMatrix u = basis_unitary(params, d_A);
  std::vector<ComplexSquareMatrix> projectors;
  projectors.reserve(d_A);
  for (int k = 0; k < d_A; ++k) {
    const Eigen::VectorXcd col = u.col(k);
    projectors.push_back(col * col.adjoint());
  }
  return make_measurement(std::move(projectors), params);
}

double brute_force_J_serial(const BipartiteDensityOperator& rho, int grid_steps) {
  if (rho.d_A() != 2) {
    throw dimension_error("brute_force_J: only two-outcome ancillas supported");
  }
  if (grid_steps < 1) {
    throw error("brute_force_J: grid_steps must be positive");
  }
  const ComplexSquareMatrix& m = rho.matrix();
  const int d_S = rho.d_S();
  const double s_marginal = von_neumann_entropy(partial_trace(rho, Subsystem::A));
  const int cols = 2 * grid_steps;
  double best = -1.0;
  for (long idx = 0; idx < static_cast<long>(grid_steps) * cols; ++idx) {
    const int i = static_cast<int>(idx / cols);
    const int j = static_cast<int>(idx % cols);
    const double theta = (i + 0.5) * M_PI / grid_steps;
    const double phi = (j + 0.5) * two_pi / cols;
    best = std::max(best, J_two_outcome(m, d_S, s_marginal, theta, phi));
  }
  return best;
}

double brute_force_J(const BipartiteDensityOperator& rho, int grid_steps) {
  if (rho.d_A() != 2) {
    throw dimension_error("brute_force_J: only two-outcome ancillas supported");
  }
  if (grid_steps < 1) {
    throw error("brute_force_J: grid_steps must be positive");
  }
  const ComplexSquareMatrix& m = rho.matrix();
  const int d_S = rho.d_S();
  const double s_marginal = von_neumann_entropy(partial_trace(rho, Subsystem::A));
  const int cols = 2 * grid_steps;
  const long total = static_cast<long>(grid_steps) * cols;
  double best = -1.0;
#pragma omp parallel for reduction(max : best) schedule(static)
  for (long idx = 0; idx < total; ++idx) {
    const int i = static_cast<int>(idx / cols);
    const int j = static_cast<int>(idx % cols);
    const double theta = (i + 0.5) * M_PI / grid_steps;
    const double phi = (j + 0.5) * two_pi / cols;
    best = std::max(best, J_two_outcome(m, d_S, s_marginal, theta, phi));
  }
  return best;
}

CorrelationReport maximize_classical_correlations(const BipartiteDensityOperator& rho,
                                                  const SearchSettings& budget) {
  const int d_A = rho.d_A();
  if (d_A > 4) {
    throw dimension_error("maximize_classical_correlations: d_A above supported range");
  }
  const double mi = mutual_information(rho);
  if (d_A == 1) {
    std::vector<ComplexSquareMatrix> proj{ComplexSquareMatrix::Identity(1, 1)};
    CorrelationReport report;
    report.mutual_information = mi;
    report.classical_J = 0.0;
    report.discord = mi;
    report.optimal_measurement =
        make_measurement(std::move(proj), Eigen::VectorXd(0));
    return report;
  }

  const ComplexSquareMatrix& m = rho.matrix();
  const int d_S = rho.d_S();
  const double s_marginal = von_neumann_entropy(partial_trace(rho, Subsystem::A));
  const int nparams = d_A * (d_A - 1);

  auto objective = [&](const Eigen::VectorXd& x) {
    if (d_A == 2) {
      return -J_two_outcome(m, d_S, s_marginal, x(0), x(1));
    }
    return -J_given_unitary(m, d_S, d_A, s_marginal, basis_unitary(x, d_A));
  };

  // Coarse grid seed for the first restart.
  Eigen::VectorXd grid_best(2);
  double grid_best_J = -1.0;
  if (d_A == 2) {
    for (int i = 0; i < budget.grid_theta; ++i) {
      for (int j = 0; j < budget.grid_phi; ++j) {
        const double theta = (i + 0.5) * M_PI / budget.grid_theta;
        const double phi = (j + 0.5) * two_pi / budget.grid_phi;
        const double val = J_two_outcome(m, d_S, s_marginal, theta, phi);
        if (val > grid_best_J) {
          grid_best_J = val;
          grid_best << theta, phi;
        }
      }
    }
  }

  const int restarts = std::max(budget.restarts, 1);
  std::vector<SimplexResult> results(restarts);

  auto run_restart = [&](int r) {
    Eigen::VectorXd x0(nparams);
    if (r == 0 && d_A == 2) {
      x0 = grid_best;
    } else {
      SplitMix64 rng(derive_seed(budget.seed, static_cast<std::uint64_t>(r)));
      for (int i = 0; i < nparams; i += 2) {
        x0(i) = rng.uniform() * M_PI;
        x0(i + 1) = rng.uniform() * two_pi;
      }
    }
    results[r] = nelder_mead(objective, x0, 0.25, budget.max_iterations,
                             budget.f_tol);
  };

  if (budget.parallel) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < restarts; ++r) {
      run_restart(r);
    }
  } else {
    for (int r = 0; r < restarts; ++r) {
      run_restart(r);
    }
  }

  // Winner: highest J, ties to the lexicographically smallest canonical
  // parameters. Selection is sequential, so thread count never matters.
  auto canonical = [&](const Eigen::VectorXd& x) {
    return d_A == 2 ? canonical_two_outcome(x) : x;
  };
  int win = 0;
  Eigen::VectorXd win_canon = canonical(results[0].x);
  for (int r = 1; r < restarts; ++r) {
    const Eigen::VectorXd canon = canonical(results[r].x);
    if (results[r].f < results[win].f - 1e-12) {
      win = r;
      win_canon = canon;
    } else if (std::abs(results[r].f - results[win].f) <= 1e-12 &&
               lex_less(canon, win_canon)) {
      win = r;
      win_canon = canon;
    }
  }

  SimplexResult polish = nelder_mead(objective, results[win].x, 0.02,
                                     budget.max_iterations, budget.f_tol);
  Eigen::VectorXd best_x = results[win].x;
  double best_f = results[win].f;
  if (polish.f < best_f) {
    best_f = polish.f;
    best_x = polish.x;
  }

  CorrelationReport report;
  report.mutual_information = mi;
  report.classical_J = std::max(-best_f, 0.0);
  report.discord = mi - report.classical_J;
  report.optimal_measurement = parametrize_basis(canonical(best_x), d_A);
  return report;
}

}  // namespace qthermo
