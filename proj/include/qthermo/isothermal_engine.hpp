#pragma once

#include <utility>
#include <vector>

#include "qthermo/operator_algebra.hpp"
#include "qthermo/thermodynamics.hpp"

namespace qthermo {

// quench_hamiltonian demands alpha in (0, 1e-3].
struct regularization_error : error {
  using error::error;
};

// Lift applied to null-space eigenvalues before taking the state logarithm,
// so singular states admit a finite quench Hamiltonian.
struct KernelRegularization {
  double alpha = 1e-10;
};

// The bath contact applied after each drive step. Full thermalization
// replaces the state with the current Gibbs state; partial thermalization
// mixes toward it with weight lambda.
struct GibbsMapSpec {
  enum class Kind { full_thermalization, partial_thermalization };
  Kind kind = Kind::full_thermalization;
  double lambda = 1.0;
};

// Linear drive between two Hamiltonians, held as endpoints; H_n is produced
// on demand so long runs never materialize the whole list.
class HamiltonianSchedule {
 public:
  HamiltonianSchedule(HermitianOperator h_start, HermitianOperator h_end,
                      int segments);

  int segments() const { return segments_; }
  // H_n for n in [0, segments]; endpoints are reproduced exactly.
  HermitianOperator step(int n) const;
  // Largest per-step drive change, entrywise.
  double epsilon_scale() const { return epsilon_scale_; }

 private:
  ComplexSquareMatrix start_;
  ComplexSquareMatrix end_;
  int segments_;
  double epsilon_scale_;
};

struct StepRecord {
  int n = 0;
  double quench_work = 0.0;
  double heat = 0.0;
  double entropy_change = 0.0;
  // Entropy change minus beta times heat; vanishes to second order in the
  // step size for a quasi-static drive.
  double reversibility_residual = 0.0;
};

struct TrajectoryReport {
  std::vector<StepRecord> records;
  double total_work_extracted = 0.0;
  double ideal_work = 0.0;
  double dissipation = 0.0;
};

// -k_B T ln(rho + alpha * kernel projector). The Gibbs state of the result
// reproduces rho up to O(alpha).
HermitianOperator quench_hamiltonian(const DensityOperator& rho,
                                     const ThermalContext& ctx,
                                     const KernelRegularization& reg);

HamiltonianSchedule linear_schedule(const HermitianOperator& h_start,
                                    const HermitianOperator& h_end,
                                    int segments);

// One drive-plus-bath step: relabel the Hamiltonian at fixed state (work),
// then let the bath act (heat). Returns the new state and its ledger row.
std::pair<DensityOperator, StepRecord> apply_step(const DensityOperator& rho_prev,
                                                  const HermitianOperator& h_prev,
                                                  const HermitianOperator& h_n,
                                                  const GibbsMapSpec& map,
                                                  const ThermalContext& ctx);

// Quench to the state's own Hamiltonian, then drive back to h_target in
// `segments` steps with bath contact after each. Extracted work approaches
// the isothermal bound as the step count grows.
TrajectoryReport run_isothermal_extraction(const DensityOperator& rho,
                                           const HermitianOperator& h_target,
                                           int segments,
                                           const GibbsMapSpec& map,
                                           const ThermalContext& ctx,
                                           const KernelRegularization& reg =
                                               KernelRegularization{});

// (max, sum) of |reversibility residual| over the bath-contact steps.
std::pair<double, double> reversibility_profile(const TrajectoryReport& report);

// Drive the joint state to a target state's Hamiltonian and back: quench to
// -k_B T ln rho_SA, quasi-static drive to -k_B T ln target, final quench to
// h_S + h_A. Bath contact is full thermalization throughout.
TrajectoryReport run_joint_stroke(const BipartiteDensityOperator& rho_SA,
                                  const BipartiteDensityOperator& target,
                                  const HermitianOperator& h_S,
                                  const HermitianOperator& h_A,
                                  int segments,
                                  const ThermalContext& ctx,
                                  const KernelRegularization& reg =
                                      KernelRegularization{});

}  // namespace qthermo
