#pragma once

#include <utility>

#include "qthermo/operator_algebra.hpp"

namespace qthermo {

// Reservoir description. beta = 1/(k_B T), so k_B * T = 1/beta in whatever
// energy unit the Hamiltonians use; k_B defaults to 1.
struct ThermalContext {
  double beta;
  double k_B = 1.0;

  ThermalContext(double beta_in, double k_B_in = 1.0);
  double kT() const { return 1.0 / beta; }
  double temperature() const { return 1.0 / (k_B * beta); }
};

enum class WorkKind { ergotropy, isothermal_bound, gain, cost, budget };

struct WorkValue {
  double value = 0.0;
  WorkKind kind = WorkKind::isothermal_bound;
};

// relative_entropy: support(rho) escapes support(sigma).
struct divergence_error : error {
  using error::error;
};
// gibbs_state: Boltzmann weight range exceeds double precision.
struct thermal_range_error : error {
  using error::error;
};
// beta_star on a pure state: the matching beta is unbounded.
struct pure_state_error : error {
  using error::error;
};
// beta_star: no inverse temperature inside the search bracket matches.
struct no_solution_error : error {
  using error::error;
};

// -sum lambda_i ln lambda_i in nats, with 0 ln 0 = 0. Eigenvalues in
// [-1e-10, 0) are clamped to 0 first.
double von_neumann_entropy(const DensityOperator& rho);

// trace[rho (ln rho - ln sigma)]. Throws divergence_error when sigma has an
// eigenvalue below 1e-14 carrying rho-weight above 1e-12.
double relative_entropy(const DensityOperator& rho, const DensityOperator& sigma);

// Divergence between the Gibbs states of h at beta_a and beta_b, evaluated
// in log space from the spectrum. Assembling a cold Gibbs state as a matrix
// rounds its exponentially small populations to absolute precision, and the
// logarithm inside relative_entropy turns that into an error of order
// machine_eps / smallest_population; this form has no such limit and works
// for any nonnegative pair of betas. Beta 0 denotes the infinite-temperature
// (maximally mixed) member of the family.
double gibbs_relative_entropy(const HermitianOperator& h, double beta_a,
                              double beta_b);

// exp(-beta H)/Z. Spectrum is shifted before exponentiating, so the guard
// only rejects spreads that would underflow the smallest weight to zero and
// break the full-rank contract.
DensityOperator gibbs_state(const HermitianOperator& h, const ThermalContext& ctx);

// F_beta(rho) = trace(H rho) - k_B T S(rho).
double noneq_free_energy(const DensityOperator& rho, const HermitianOperator& h,
                         const ThermalContext& ctx);

// F_beta(rho) - F_beta(gibbs). Also equals k_B T D(rho||gibbs); the gap
// between the two evaluations is exposed separately for audits.
WorkValue isothermal_extractable_work(const DensityOperator& rho,
                                      const HermitianOperator& h,
                                      const ThermalContext& ctx);
double isothermal_work_residual(const DensityOperator& rho,
                                const HermitianOperator& h,
                                const ThermalContext& ctx);

// Passive state: state eigenvalues descending against energy eigenvalues
// ascending. Work value is the ergotropy trace(H rho) - trace(H passive).
std::pair<DensityOperator, WorkValue> passive_state_and_ergotropy(
    const DensityOperator& rho, const HermitianOperator& h);

// The inverse temperature whose Gibbs state matches S(rho), bisected in
// ln(beta) over [1e-6, 1e6] to an entropy residual of 1e-10.
double beta_star(const DensityOperator& rho, const HermitianOperator& h);

struct ErgotropyComparison {
  WorkValue w_beta;  // isothermal bound
  // Best entropy-preserving extraction; coincides with the unitary optimum
  // on qubits, where the entropy-matched Gibbs state is the passive state.
  WorkValue w_max;
  double gap = 0.0;  // w_beta - w_max = k_B T D(gibbs(beta*)||gibbs(beta))
};

ErgotropyComparison ergotropy_vs_isothermal(const DensityOperator& rho,
                                            const HermitianOperator& h,
                                            const ThermalContext& ctx);

}  // namespace qthermo
