#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qthermo/operator_algebra.hpp"

namespace qthermo {

// parametrize_basis: params length is not d_A (d_A - 1).
struct parameter_count_error : error {
  using error::error;
};

// Complete set of d_A rank-1 orthogonal projectors on the ancilla together
// with the parameter vector that produced it.
struct ProjectiveMeasurement {
  std::vector<ComplexSquareMatrix> projectors;
  Eigen::VectorXd parameters;
};

// Validates idempotence, mutual orthogonality and completeness at 1e-9.
ProjectiveMeasurement make_measurement(std::vector<ComplexSquareMatrix> projectors,
                                       Eigen::VectorXd parameters);

struct MeasurementOutcome {
  int k = 0;
  double p_k = 0.0;
  // Empty on null outcomes (p_k <= 1e-12).
  std::optional<DensityOperator> conditional_state;
};

struct CorrelationReport {
  double mutual_information = 0.0;
  double classical_J = 0.0;
  double discord = 0.0;
  ProjectiveMeasurement optimal_measurement;
};

// Budget for the basis search. Restart 0 is seeded from the best coarse grid
// point when d_A = 2; the rest start from seeded random angles. parallel
// switches the OpenMP restart loop; results are identical either way.
struct SearchSettings {
  int restarts = 32;
  int grid_theta = 24;
  int grid_phi = 48;
  std::uint64_t seed = 0;
  int max_iterations = 300;
  double f_tol = 1e-12;
  bool parallel = true;
};

double mutual_information(const BipartiteDensityOperator& rho);
// Entropy-sum form and relative-entropy form, for audits.
std::pair<double, double> mutual_information_forms(const BipartiteDensityOperator& rho);

std::vector<MeasurementOutcome> measure_ancilla(const BipartiteDensityOperator& rho,
                                                const ProjectiveMeasurement& m);

// J_pi = S(rho_S) - sum_k p_k S(rho_S|k); null outcomes contribute zero.
double extracted_information(const BipartiteDensityOperator& rho,
                             const ProjectiveMeasurement& m);

// Givens-sequence orthonormal basis. For d_A = 2 the parameters are (theta,
// phi) with half-angle columns (cos(theta/2), e^{i phi} sin(theta/2)) and
// (sin(theta/2), -e^{i phi} cos(theta/2)).
ProjectiveMeasurement parametrize_basis(const Eigen::VectorXd& params, int d_A);

// Multi-start simplex search for the measurement maximizing J. Best-effort
// global optimum: the report never undercuts a probed value, ties resolve to
// the lexicographically smallest canonical parameters.
CorrelationReport maximize_classical_correlations(const BipartiteDensityOperator& rho,
                                                  const SearchSettings& budget = {});

// Exhaustive midpoint grid over (theta, phi), d_A = 2 only; grid_steps theta
// rows and 2 * grid_steps phi columns. Lower bound on J within grid
// resolution, used as the independent check on the optimizer.
double brute_force_J(const BipartiteDensityOperator& rho, int grid_steps);
double brute_force_J_serial(const BipartiteDensityOperator& rho, int grid_steps);

}  // namespace qthermo
