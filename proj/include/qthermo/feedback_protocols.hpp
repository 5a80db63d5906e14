#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qthermo/correlations.hpp"
#include "qthermo/thermodynamics.hpp"

namespace qthermo {

// One identity check: the leftover after moving everything to one side.
struct ResidualEntry {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;

  bool pass() const;
};

// Ordered record of the work terms and identity residuals a protocol
// produced. Lookup is by label; labels are stable API.
class WorkLedger {
 public:
  void add(std::string label, WorkValue value);
  void add_residual(std::string name, double value, double tolerance);

  const WorkValue& at(std::string_view label) const;
  const ResidualEntry& residual(std::string_view name) const;
  bool all_within_tolerance() const;

  const std::vector<std::pair<std::string, WorkValue>>& entries() const {
    return entries_;
  }
  const std::vector<ResidualEntry>& residuals() const { return residuals_; }

 private:
  std::vector<std::pair<std::string, WorkValue>> entries_;
  std::vector<ResidualEntry> residuals_;
};

// A measurement-feedback setup: joint state, local Hamiltonians, bath, and
// the ancilla basis that is read out.
struct FeedbackScenario {
  BipartiteDensityOperator rho_SA;
  HermitianOperator h_S;
  HermitianOperator h_A;
  ThermalContext ctx;
  ProjectiveMeasurement measurement;
};

// h_S otimes I + I otimes h_A on the joint space.
HermitianOperator joint_hamiltonian(const HermitianOperator& h_S,
                                    const HermitianOperator& h_A);

// Per-outcome free-energy change of the system conditioned on reading k,
// F(rho_{S|k}) - F(rho_S). Outcomes of negligible probability contribute 0.
std::vector<double> conditional_free_energy_change(const FeedbackScenario& s);

// Average work extractable from the system when the protocol is conditioned
// on the readout, versus ignoring it. Entries: "conditional_work",
// "unconditional_work", "feedback_gain". The gain equals k_B T times the
// information the readout extracts, and is never negative.
WorkLedger feedback_extractable_work(const FeedbackScenario& s);

// Feedback gain maximized over the readout basis. Returns the ledger of the
// winning scenario plus the basis itself.
std::pair<WorkLedger, ProjectiveMeasurement> optimal_feedback_gain(
    const BipartiteDensityOperator& rho_SA, const HermitianOperator& h_S,
    const HermitianOperator& h_A, const ThermalContext& ctx,
    const SearchSettings& budget = SearchSettings{});

// Work extractable from the joint state as a whole, decomposed into local
// terms plus k_B T times the mutual information.
WorkLedger joint_extractable_work(const BipartiteDensityOperator& rho_SA,
                                  const HermitianOperator& h_S,
                                  const HermitianOperator& h_A,
                                  const ThermalContext& ctx);

// What conditioned extraction leaves on the table relative to operating on
// the joint state: k_B T times the discord of the readout basis.
WorkLedger discord_work_deficit(const FeedbackScenario& s);

// Energy cost of the readout itself: trace[h_A (sigma_A - rho_A)] with
// sigma_A the dephased ancilla marginal.
WorkValue measurement_cost(const BipartiteDensityOperator& rho_SA,
                           const HermitianOperator& h_A,
                           const ProjectiveMeasurement& m);

// Change in jointly extractable work caused by the readout, minus its cost.
// Carries both equivalent closed forms and the raw work-minus-cost tradeoff.
WorkLedger net_measurement_gain(const FeedbackScenario& s);

// Nonselective readout applied to the state: quantum correlations removed,
// classical ones kept.
BipartiteDensityOperator decorrelation_target(const BipartiteDensityOperator& rho_SA,
                                              const ProjectiveMeasurement& m);

// Work released while the state dephases to the decorrelation target, with
// its relation to the discord of the basis.
WorkLedger discord_stroke_work(const BipartiteDensityOperator& rho_SA,
                               const HermitianOperator& h_S,
                               const HermitianOperator& h_A,
                               const ThermalContext& ctx,
                               const ProjectiveMeasurement& m);

// Full accounting of a measure-then-extract protocol at the optimal basis:
// the dephasing stroke, the work left in the dephased state, and the net
// gain of reading that state out, against the closed-form total.
WorkLedger total_feedback_budget(const BipartiteDensityOperator& rho_SA,
                                 const HermitianOperator& h_S,
                                 const HermitianOperator& h_A,
                                 const ThermalContext& ctx,
                                 const SearchSettings& budget = SearchSettings{});

}  // namespace qthermo
