#include "qthermo/feedback_protocols.hpp"

#include <algorithm>
#include <cmath>

namespace qthermo {

namespace {

// Everything the readout determines about the system: outcome list, average
// conditional entropy, outcome-distribution entropy, extracted information.
struct ReadoutSummary {
  std::vector<MeasurementOutcome> outcomes;
  double entropy_S = 0.0;
  double avg_conditional_entropy = 0.0;
  double shannon = 0.0;
  double information = 0.0;
};

ReadoutSummary summarize_readout(const BipartiteDensityOperator& rho,
                                 const ProjectiveMeasurement& m) {
  ReadoutSummary r;
  r.outcomes = measure_ancilla(rho, m);
  r.entropy_S = von_neumann_entropy(partial_trace(rho, Subsystem::A));
  for (const MeasurementOutcome& out : r.outcomes) {
    if (out.conditional_state) {
      r.avg_conditional_entropy +=
          out.p_k * von_neumann_entropy(*out.conditional_state);
    }
    if (out.p_k > kernel_cutoff) {
      r.shannon -= out.p_k * std::log(out.p_k);
    }
  }
  r.information = r.entropy_S - r.avg_conditional_entropy;
  return r;
}

}  // namespace

bool ResidualEntry::pass() const { return std::abs(value) <= tolerance; }

void WorkLedger::add(std::string label, WorkValue value) {
  entries_.emplace_back(std::move(label), value);
}

void WorkLedger::add_residual(std::string name, double value, double tolerance) {
  residuals_.push_back(ResidualEntry{std::move(name), value, tolerance});
}

const WorkValue& WorkLedger::at(std::string_view label) const {
  for (const auto& entry : entries_) {
    if (entry.first == label) {
      return entry.second;
    }
  }
  throw error("WorkLedger: no entry named " + std::string(label));
}

const ResidualEntry& WorkLedger::residual(std::string_view name) const {
  for (const ResidualEntry& r : residuals_) {
    if (r.name == name) {
      return r;
    }
  }
  throw error("WorkLedger: no residual named " + std::string(name));
}

bool WorkLedger::all_within_tolerance() const {
  return std::all_of(residuals_.begin(), residuals_.end(),
                     [](const ResidualEntry& r) { return r.pass(); });
}

HermitianOperator joint_hamiltonian(const HermitianOperator& h_S,
                                    const HermitianOperator& h_A) {
  const Eigen::Index d_S = h_S.dim();
  const Eigen::Index d_A = h_A.dim();
  return HermitianOperator(
      tensor_product(h_S.matrix(), ComplexSquareMatrix::Identity(d_A, d_A)) +
      tensor_product(ComplexSquareMatrix::Identity(d_S, d_S), h_A.matrix()));
}

std::vector<double> conditional_free_energy_change(const FeedbackScenario& s) {
  const DensityOperator rho_S = partial_trace(s.rho_SA, Subsystem::A);
  const double f_S = noneq_free_energy(rho_S, s.h_S, s.ctx);
  std::vector<double> changes;
  for (const MeasurementOutcome& out : measure_ancilla(s.rho_SA, s.measurement)) {
    changes.push_back(
        out.conditional_state
            ? noneq_free_energy(*out.conditional_state, s.h_S, s.ctx) - f_S
            : 0.0);
  }
  return changes;
}

WorkLedger feedback_extractable_work(const FeedbackScenario& s) {
  const DensityOperator rho_S = partial_trace(s.rho_SA, Subsystem::A);
  const WorkValue w_S = isothermal_extractable_work(rho_S, s.h_S, s.ctx);
  const ReadoutSummary read = summarize_readout(s.rho_SA, s.measurement);

  double conditional = 0.0;
  for (const MeasurementOutcome& out : read.outcomes) {
    if (out.conditional_state) {
      conditional +=
          out.p_k *
          isothermal_extractable_work(*out.conditional_state, s.h_S, s.ctx).value;
    }
  }
  const double gain = conditional - w_S.value;

  WorkLedger ledger;
  ledger.add("conditional_work", {conditional, WorkKind::isothermal_bound});
  ledger.add("unconditional_work", w_S);
  ledger.add("feedback_gain", {gain, WorkKind::gain});
  ledger.add_residual("gain_vs_information",
                      gain - s.ctx.kT() * read.information, algebraic_tol);
  ledger.add_residual("gain_nonnegative", std::min(gain, 0.0), algebraic_tol);
  return ledger;
}

std::pair<WorkLedger, ProjectiveMeasurement> optimal_feedback_gain(
    const BipartiteDensityOperator& rho_SA, const HermitianOperator& h_S,
    const HermitianOperator& h_A, const ThermalContext& ctx,
    const SearchSettings& budget) {
  CorrelationReport report = maximize_classical_correlations(rho_SA, budget);
  FeedbackScenario s{rho_SA, h_S, h_A, ctx, report.optimal_measurement};
  WorkLedger ledger = feedback_extractable_work(s);
  const double gain = ledger.at("feedback_gain").value;
  ledger.add("optimal_gain", {gain, WorkKind::gain});
  ledger.add("measurement_cost",
             measurement_cost(rho_SA, h_A, report.optimal_measurement));
  ledger.add_residual("optimal_gain_vs_correlations",
                      gain - ctx.kT() * report.classical_J, search_tol);
  return {std::move(ledger), std::move(report.optimal_measurement)};
}

WorkLedger joint_extractable_work(const BipartiteDensityOperator& rho_SA,
                                  const HermitianOperator& h_S,
                                  const HermitianOperator& h_A,
                                  const ThermalContext& ctx) {
  const HermitianOperator h_SA = joint_hamiltonian(h_S, h_A);
  const WorkValue joint = isothermal_extractable_work(rho_SA.state(), h_SA, ctx);
  const WorkValue w_S =
      isothermal_extractable_work(partial_trace(rho_SA, Subsystem::A), h_S, ctx);
  const WorkValue w_A =
      isothermal_extractable_work(partial_trace(rho_SA, Subsystem::S), h_A, ctx);
  const double corr = ctx.kT() * mutual_information(rho_SA);

  WorkLedger ledger;
  ledger.add("joint_work", joint);
  ledger.add("system_work", w_S);
  ledger.add("ancilla_work", w_A);
  ledger.add("correlation_term", {corr, WorkKind::budget});
  ledger.add_residual("decomposition",
                      joint.value - (w_S.value + w_A.value + corr),
                      algebraic_tol);
  return ledger;
}

WorkLedger discord_work_deficit(const FeedbackScenario& s) {
  WorkLedger fb = feedback_extractable_work(s);
  const WorkValue w_A = isothermal_extractable_work(
      partial_trace(s.rho_SA, Subsystem::S), s.h_A, s.ctx);
  const HermitianOperator h_SA = joint_hamiltonian(s.h_S, s.h_A);
  const WorkValue joint = isothermal_extractable_work(s.rho_SA.state(), h_SA, s.ctx);
  const double information = extracted_information(s.rho_SA, s.measurement);
  const double deficit =
      s.ctx.kT() * (mutual_information(s.rho_SA) - information);
  const double fb_plus_anc = fb.at("conditional_work").value + w_A.value;

  WorkLedger ledger;
  ledger.add("deficit", {deficit, WorkKind::budget});
  ledger.add("joint_work", joint);
  ledger.add("feedback_plus_ancilla",
             {fb_plus_anc, WorkKind::isothermal_bound});
  ledger.add_residual("deficit_identity",
                      fb_plus_anc - (joint.value - deficit), search_tol);
  return ledger;
}

WorkValue measurement_cost(const BipartiteDensityOperator& rho_SA,
                           const HermitianOperator& h_A,
                           const ProjectiveMeasurement& m) {
  const DensityOperator rho_A = partial_trace(rho_SA, Subsystem::S);
  ComplexSquareMatrix sigma =
      ComplexSquareMatrix::Zero(rho_SA.d_A(), rho_SA.d_A());
  for (const ComplexSquareMatrix& pk : m.projectors) {
    sigma += pk * rho_A.matrix() * pk;
  }
  const double cost = (h_A.matrix() * (sigma - rho_A.matrix())).trace().real();
  return {cost, WorkKind::cost};
}

WorkLedger net_measurement_gain(const FeedbackScenario& s) {
  const double kT = s.ctx.kT();
  const HermitianOperator h_SA = joint_hamiltonian(s.h_S, s.h_A);
  const double f_before = noneq_free_energy(s.rho_SA.state(), h_SA, s.ctx);
  const ReadoutSummary read = summarize_readout(s.rho_SA, s.measurement);

  // Free energy of the post-readout ensemble. Each member is the conditional
  // system state alongside the ancilla collapsed onto a pure projector, so
  // only the projector's energy enters.
  double f_after = 0.0;
  for (const MeasurementOutcome& out : read.outcomes) {
    if (!out.conditional_state) {
      continue;
    }
    const double e_S =
        (s.h_S.matrix() * out.conditional_state->matrix()).trace().real();
    const double e_A =
        (s.h_A.matrix() * s.measurement.projectors[out.k]).trace().real();
    f_after += out.p_k *
               (e_S + e_A - kT * von_neumann_entropy(*out.conditional_state));
  }
  const double change = f_after - f_before;
  const double cost = measurement_cost(s.rho_SA, s.h_A, s.measurement).value;
  const double net = change - cost;

  const double s_SA = von_neumann_entropy(s.rho_SA.state());
  const double entropy_form = kT * (s_SA - read.avg_conditional_entropy);
  const double mi = mutual_information(s.rho_SA);
  const double s_A =
      von_neumann_entropy(partial_trace(s.rho_SA, Subsystem::S));
  const double discord_form = kT * (s_A - (mi - read.information));
  const double tradeoff = kT * read.information - cost;

  WorkLedger ledger;
  ledger.add("measurement_work_change", {change, WorkKind::gain});
  ledger.add("measurement_cost", {cost, WorkKind::cost});
  ledger.add("net_gain", {net, WorkKind::gain});
  ledger.add("entropy_form", {entropy_form, WorkKind::gain});
  ledger.add("discord_form", {discord_form, WorkKind::gain});
  ledger.add("gain_minus_cost", {tradeoff, WorkKind::gain});
  ledger.add_residual("net_vs_entropy_form", net - entropy_form, algebraic_tol);
  ledger.add_residual("entropy_vs_discord_form", entropy_form - discord_form,
                      algebraic_tol);
  ledger.add_residual("net_nonnegative", std::min(net, 0.0), search_tol);
  return ledger;
}

BipartiteDensityOperator decorrelation_target(
    const BipartiteDensityOperator& rho_SA, const ProjectiveMeasurement& m) {
  const ComplexSquareMatrix eye_S =
      ComplexSquareMatrix::Identity(rho_SA.d_S(), rho_SA.d_S());
  ComplexSquareMatrix sum = ComplexSquareMatrix::Zero(rho_SA.matrix().rows(),
                                                      rho_SA.matrix().cols());
  for (const ComplexSquareMatrix& pk : m.projectors) {
    const ComplexSquareMatrix lifted = tensor_product(eye_S, pk);
    sum += lifted * rho_SA.matrix() * lifted;
  }
  return BipartiteDensityOperator(DensityOperator::unchecked(sum),
                                  rho_SA.d_S(), rho_SA.d_A());
}

WorkLedger discord_stroke_work(const BipartiteDensityOperator& rho_SA,
                               const HermitianOperator& h_S,
                               const HermitianOperator& h_A,
                               const ThermalContext& ctx,
                               const ProjectiveMeasurement& m) {
  const double kT = ctx.kT();
  const HermitianOperator h_SA = joint_hamiltonian(h_S, h_A);
  const BipartiteDensityOperator target = decorrelation_target(rho_SA, m);
  const WorkValue before = isothermal_extractable_work(rho_SA.state(), h_SA, ctx);
  const WorkValue after = isothermal_extractable_work(target.state(), h_SA, ctx);
  const double stroke = before.value - after.value;

  const double information = extracted_information(rho_SA, m);
  const double discord_value =
      kT * (mutual_information(rho_SA) - information);

  const DensityOperator rho_S = partial_trace(rho_SA, Subsystem::A);
  const DensityOperator rho_A = partial_trace(rho_SA, Subsystem::S);
  const WorkValue w_S = isothermal_extractable_work(rho_S, h_S, ctx);
  const WorkValue w_A = isothermal_extractable_work(rho_A, h_A, ctx);
  const double input = w_S.value + w_A.value + kT * information;

  const double cost = measurement_cost(rho_SA, h_A, m).value;
  const DensityOperator sigma_A = partial_trace(target, Subsystem::S);
  const double dephasing_gain =
      kT * (von_neumann_entropy(sigma_A) - von_neumann_entropy(rho_A));

  WorkLedger ledger;
  ledger.add("stroke_work", {stroke, WorkKind::isothermal_bound});
  ledger.add("discord_value", {discord_value, WorkKind::budget});
  ledger.add("input_work", {input, WorkKind::isothermal_bound});
  ledger.add("remaining_work", after);
  ledger.add("dephasing_entropy_gain", {dephasing_gain, WorkKind::gain});
  ledger.add("measurement_cost", {cost, WorkKind::cost});
  // The readout basis need not commute with the ancilla marginal; the stroke
  // then exceeds the discord by the ancilla dephasing entropy minus the
  // readout cost. The second residual closes exactly, the first only when
  // the basis leaves the marginal untouched.
  ledger.add_residual("stroke_vs_discord", stroke - discord_value, search_tol);
  ledger.add_residual("stroke_identity",
                      stroke - discord_value - dephasing_gain + cost,
                      algebraic_tol);
  return ledger;
}

WorkLedger total_feedback_budget(const BipartiteDensityOperator& rho_SA,
                                 const HermitianOperator& h_S,
                                 const HermitianOperator& h_A,
                                 const ThermalContext& ctx,
                                 const SearchSettings& budget) {
  const double kT = ctx.kT();
  CorrelationReport report = maximize_classical_correlations(rho_SA, budget);
  const ProjectiveMeasurement& m = report.optimal_measurement;
  const HermitianOperator h_SA = joint_hamiltonian(h_S, h_A);

  const double stroke_term = kT * report.discord;
  const BipartiteDensityOperator target = decorrelation_target(rho_SA, m);
  const WorkValue direct = isothermal_extractable_work(target.state(), h_SA, ctx);
  FeedbackScenario on_target{target, h_S, h_A, ctx, m};
  WorkLedger readout = net_measurement_gain(on_target);
  const double measurement_term = readout.at("net_gain").value;
  const double assembled = stroke_term + direct.value + measurement_term;

  const DensityOperator rho_S = partial_trace(rho_SA, Subsystem::A);
  const DensityOperator rho_A = partial_trace(rho_SA, Subsystem::S);
  const WorkValue w_S = isothermal_extractable_work(rho_S, h_S, ctx);
  const WorkValue w_A = isothermal_extractable_work(rho_A, h_A, ctx);
  const double closed = w_S.value + w_A.value +
                        kT * report.mutual_information +
                        kT * von_neumann_entropy(rho_A);
  const double cost = measurement_cost(rho_SA, h_A, m).value;

  WorkLedger ledger;
  ledger.add("stroke_term", {stroke_term, WorkKind::budget});
  ledger.add("direct_term", direct);
  ledger.add("measurement_term", {measurement_term, WorkKind::gain});
  ledger.add("assembled_budget", {assembled, WorkKind::budget});
  ledger.add("closed_form_budget", {closed, WorkKind::budget});
  ledger.add("total_budget", {closed, WorkKind::budget});
  ledger.add("measurement_cost", {cost, WorkKind::cost});
  ledger.add_residual("assembly_vs_closed", assembled - closed, search_tol);
  ledger.add_residual("assembly_identity", assembled - closed - cost,
                      algebraic_tol);
  return ledger;
}

}  // namespace qthermo
