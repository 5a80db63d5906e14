#include "qthermo/isothermal_engine.hpp"

#include <cmath>

namespace qthermo {

namespace {

void validate_regularization(const KernelRegularization& reg) {
  if (!(reg.alpha > 0.0) || reg.alpha > 1e-3) {
    throw regularization_error(
        "KernelRegularization: alpha must lie in (0, 1e-3]");
  }
}

void validate_map(const GibbsMapSpec& map) {
  if (map.kind == GibbsMapSpec::Kind::partial_thermalization &&
      (!(map.lambda > 0.0) || map.lambda > 1.0)) {
    throw error("GibbsMapSpec: lambda must lie in (0, 1]");
  }
}

double trace_against(const HermitianOperator& h, const DensityOperator& rho) {
  return (h.matrix() * rho.matrix()).trace().real();
}

}  // namespace

HamiltonianSchedule::HamiltonianSchedule(HermitianOperator h_start,
                                         HermitianOperator h_end, int segments)
    : start_(h_start.matrix()), end_(h_end.matrix()), segments_(segments) {
  if (segments < 1) {
    throw error("HamiltonianSchedule: need at least one segment");
  }
  if (start_.rows() != end_.rows()) {
    throw dimension_error("HamiltonianSchedule: endpoint dims disagree");
  }
  epsilon_scale_ = max_abs(end_ - start_) / segments;
}

HermitianOperator HamiltonianSchedule::step(int n) const {
  if (n < 0 || n > segments_) {
    throw error("HamiltonianSchedule: step index out of range");
  }
  const double t = static_cast<double>(n) / segments_;
  return HermitianOperator((1.0 - t) * start_ + t * end_);
}

HermitianOperator quench_hamiltonian(const DensityOperator& rho,
                                     const ThermalContext& ctx,
                                     const KernelRegularization& reg) {
  validate_regularization(reg);
  const Eigensystem es = hermitian_eigensystem(rho.matrix());
  const double kT = ctx.kT();
  const Eigen::Index d = es.values.size();
  ComplexSquareMatrix h = ComplexSquareMatrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    double weight = es.values(i);
    if (weight < kernel_cutoff) {
      weight = std::max(weight, 0.0) + reg.alpha;
    }
    h += (-kT * std::log(weight)) *
         (es.vectors.col(i) * es.vectors.col(i).adjoint());
  }
  return HermitianOperator(h);
}

HamiltonianSchedule linear_schedule(const HermitianOperator& h_start,
                                    const HermitianOperator& h_end,
                                    int segments) {
  return HamiltonianSchedule(h_start, h_end, segments);
}

std::pair<DensityOperator, StepRecord> apply_step(const DensityOperator& rho_prev,
                                                  const HermitianOperator& h_prev,
                                                  const HermitianOperator& h_n,
                                                  const GibbsMapSpec& map,
                                                  const ThermalContext& ctx) {
  validate_map(map);
  StepRecord rec;
  rec.quench_work =
      ((h_n.matrix() - h_prev.matrix()) * rho_prev.matrix()).trace().real();

  DensityOperator gibbs = gibbs_state(h_n, ctx);
  DensityOperator rho_n =
      map.kind == GibbsMapSpec::Kind::full_thermalization
          ? std::move(gibbs)
          : DensityOperator::unchecked((1.0 - map.lambda) * rho_prev.matrix() +
                                       map.lambda * gibbs.matrix());

  rec.heat =
      (h_n.matrix() * (rho_n.matrix() - rho_prev.matrix())).trace().real();
  rec.entropy_change =
      von_neumann_entropy(rho_n) - von_neumann_entropy(rho_prev);
  rec.reversibility_residual = rec.entropy_change - ctx.beta * rec.heat;
  return {std::move(rho_n), rec};
}

TrajectoryReport run_isothermal_extraction(const DensityOperator& rho,
                                           const HermitianOperator& h_target,
                                           int segments,
                                           const GibbsMapSpec& map,
                                           const ThermalContext& ctx,
                                           const KernelRegularization& reg) {
  if (segments < 1) {
    throw error("run_isothermal_extraction: need at least one segment");
  }
  const HermitianOperator h0 = quench_hamiltonian(rho, ctx, reg);
  const HamiltonianSchedule schedule = linear_schedule(h0, h_target, segments);

  TrajectoryReport report;
  report.records.reserve(static_cast<std::size_t>(segments) + 1);

  StepRecord initial;
  initial.n = 0;
  initial.quench_work = trace_against(h0, rho) - trace_against(h_target, rho);
  report.records.push_back(initial);

  DensityOperator state = rho;
  HermitianOperator h_prev = h0;
  for (int n = 1; n <= segments; ++n) {
    HermitianOperator h_n = schedule.step(n);
    auto [next, rec] = apply_step(state, h_prev, h_n, map, ctx);
    rec.n = n;
    report.records.push_back(rec);
    state = std::move(next);
    h_prev = std::move(h_n);
  }

  double spent = 0.0;
  for (const StepRecord& rec : report.records) {
    spent += rec.quench_work;
  }
  report.total_work_extracted = -spent;
  report.ideal_work = isothermal_extractable_work(rho, h_target, ctx).value;
  report.dissipation = report.ideal_work - report.total_work_extracted;
  return report;
}

std::pair<double, double> reversibility_profile(const TrajectoryReport& report) {
  double max_residual = 0.0;
  double sum_residual = 0.0;
  for (const StepRecord& rec : report.records) {
    if (rec.n == 0 || rec.n > static_cast<int>(report.records.size()) - 1) {
      continue;
    }
    const double r = std::abs(rec.reversibility_residual);
    max_residual = std::max(max_residual, r);
    sum_residual += r;
  }
  return {max_residual, sum_residual};
}

TrajectoryReport run_joint_stroke(const BipartiteDensityOperator& rho_SA,
                                  const BipartiteDensityOperator& target,
                                  const HermitianOperator& h_S,
                                  const HermitianOperator& h_A,
                                  int segments,
                                  const ThermalContext& ctx,
                                  const KernelRegularization& reg) {
  if (segments < 1) {
    throw error("run_joint_stroke: need at least one segment");
  }
  if (rho_SA.d_S() != target.d_S() || rho_SA.d_A() != target.d_A()) {
    throw dimension_error("run_joint_stroke: source and target dims disagree");
  }
  const Eigen::Index d_S = h_S.dim();
  const Eigen::Index d_A = h_A.dim();
  const HermitianOperator h_pair(
      tensor_product(h_S.matrix(), ComplexSquareMatrix::Identity(d_A, d_A)) +
      tensor_product(ComplexSquareMatrix::Identity(d_S, d_S), h_A.matrix()));

  const HermitianOperator h_from = quench_hamiltonian(rho_SA.state(), ctx, reg);
  const HermitianOperator h_to = quench_hamiltonian(target.state(), ctx, reg);
  const HamiltonianSchedule schedule = linear_schedule(h_from, h_to, segments);
  const GibbsMapSpec map{GibbsMapSpec::Kind::full_thermalization, 1.0};

  TrajectoryReport report;
  report.records.reserve(static_cast<std::size_t>(segments) + 2);

  StepRecord initial;
  initial.n = 0;
  initial.quench_work = trace_against(h_from, rho_SA.state()) -
                        trace_against(h_pair, rho_SA.state());
  report.records.push_back(initial);

  DensityOperator state = rho_SA.state();
  HermitianOperator h_prev = h_from;
  for (int n = 1; n <= segments; ++n) {
    HermitianOperator h_n = schedule.step(n);
    auto [next, rec] = apply_step(state, h_prev, h_n, map, ctx);
    rec.n = n;
    report.records.push_back(rec);
    state = std::move(next);
    h_prev = std::move(h_n);
  }

  StepRecord closing;
  closing.n = segments + 1;
  closing.quench_work =
      trace_against(h_pair, state) - trace_against(h_to, state);
  report.records.push_back(closing);

  double spent = 0.0;
  for (const StepRecord& rec : report.records) {
    spent += rec.quench_work;
  }
  report.total_work_extracted = -spent;
  report.ideal_work =
      isothermal_extractable_work(rho_SA.state(), h_pair, ctx).value -
      isothermal_extractable_work(target.state(), h_pair, ctx).value;
  report.dissipation = report.ideal_work - report.total_work_extracted;
  return report;
}

}  // namespace qthermo
