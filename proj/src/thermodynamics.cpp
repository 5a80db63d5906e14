#include "qthermo/thermodynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qthermo {

namespace {

// Largest beta * spread such that exp(-x) stays a normal double.
constexpr double weight_range_limit = 700.0;

double clamped_entropy_term(double lambda) {
  if (lambda < kernel_cutoff) {
    return 0.0;
  }
  return -lambda * std::log(lambda);
}

// Entropy of the Gibbs state of a spectrum, stable for arbitrarily large
// beta (log-sum-exp on the shifted weights).
double gibbs_entropy_of_spectrum(const Eigen::VectorXd& energies, double beta) {
  const double emin = energies.minCoeff();
  double z = 0.0;
  for (Eigen::Index i = 0; i < energies.size(); ++i) {
    z += std::exp(-beta * (energies(i) - emin));
  }
  const double lnz = std::log(z);
  double s = 0.0;
  for (Eigen::Index i = 0; i < energies.size(); ++i) {
    const double x = -beta * (energies(i) - emin);
    const double w = std::exp(x) / z;
    if (w > 0.0) {
      s += w * (lnz - x);
    }
  }
  return s;
}

double gibbs_mean_energy_of_spectrum(const Eigen::VectorXd& energies, double beta) {
  const double emin = energies.minCoeff();
  double z = 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < energies.size(); ++i) {
    const double w = std::exp(-beta * (energies(i) - emin));
    z += w;
    acc += w * energies(i);
  }
  return acc / z;
}

}  // namespace

ThermalContext::ThermalContext(double beta_in, double k_B_in)
    : beta(beta_in), k_B(k_B_in) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw error("ThermalContext: beta must be finite and positive");
  }
  if (!(k_B > 0.0) || !std::isfinite(k_B)) {
    throw error("ThermalContext: k_B must be finite and positive");
  }
}

double von_neumann_entropy(const DensityOperator& rho) {
  Eigensystem es = hermitian_eigensystem(rho.matrix());
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    s += clamped_entropy_term(std::max(es.values(i), 0.0));
  }
  return s;
}

double relative_entropy(const DensityOperator& rho, const DensityOperator& sigma) {
  if (rho.dim() != sigma.dim()) {
    throw dimension_error("relative_entropy: dimension mismatch");
  }
  Eigensystem sig = hermitian_eigensystem(sigma.matrix());

  double cross = 0.0;  // trace[rho ln sigma]
  for (Eigen::Index j = 0; j < sig.values.size(); ++j) {
    const Eigen::VectorXcd u = sig.vectors.col(j);
    const double weight = std::real(u.dot(rho.matrix() * u));
    const double mu = sig.values(j);
    if (mu < kernel_cutoff) {
      if (weight > null_outcome_tol) {
        throw divergence_error(
            "relative_entropy: rho has weight outside the support of sigma");
      }
      continue;  // 0 * ln 0 convention on the null directions
    }
    cross += weight * std::log(mu);
  }

  Eigensystem r = hermitian_eigensystem(rho.matrix());
  double self = 0.0;  // trace[rho ln rho]
  for (Eigen::Index i = 0; i < r.values.size(); ++i) {
    self -= clamped_entropy_term(std::max(r.values(i), 0.0));
  }
  return self - cross;
}

double gibbs_relative_entropy(const HermitianOperator& h, double beta_a,
                              double beta_b) {
  if (!(beta_a >= 0.0) || !std::isfinite(beta_a) || !(beta_b >= 0.0) ||
      !std::isfinite(beta_b)) {
    throw error("gibbs_relative_entropy: betas must be finite and nonnegative");
  }
  Eigensystem es = hermitian_eigensystem(h);
  const double emin = es.values.minCoeff();
  auto shifted_lnz = [&](double beta) {
    double z = 0.0;
    for (Eigen::Index i = 0; i < es.values.size(); ++i) {
      z += std::exp(-beta * (es.values(i) - emin));
    }
    return std::log(z);
  };
  // D = (beta_b - beta_a) <H>_a + ln Z_b - ln Z_a; shifting every energy by
  // emin leaves the combination unchanged and keeps the weights in range.
  const double mean_shifted =
      gibbs_mean_energy_of_spectrum(es.values, beta_a) - emin;
  return (beta_b - beta_a) * mean_shifted + shifted_lnz(beta_b) -
         shifted_lnz(beta_a);
}

DensityOperator gibbs_state(const HermitianOperator& h, const ThermalContext& ctx) {
  Eigensystem es = hermitian_eigensystem(h);
  const double spread = es.values.maxCoeff() - es.values.minCoeff();
  if (ctx.beta * spread >= weight_range_limit) {
    throw thermal_range_error(
        "gibbs_state: beta * spectral spread exceeds double range");
  }
  const double emin = es.values.minCoeff();
  Eigen::VectorXd w(es.values.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    w(i) = std::exp(-ctx.beta * (es.values(i) - emin));
  }
  w /= w.sum();
  ComplexSquareMatrix m = es.vectors * w.asDiagonal() * es.vectors.adjoint();
  return DensityOperator::unchecked(m);
}

double noneq_free_energy(const DensityOperator& rho, const HermitianOperator& h,
                         const ThermalContext& ctx) {
  if (rho.dim() != h.dim()) {
    throw dimension_error("noneq_free_energy: dimension mismatch");
  }
  const double energy = (h.matrix() * rho.matrix()).trace().real();
  return energy - ctx.kT() * von_neumann_entropy(rho);
}

WorkValue isothermal_extractable_work(const DensityOperator& rho,
                                      const HermitianOperator& h,
                                      const ThermalContext& ctx) {
  DensityOperator gibbs = gibbs_state(h, ctx);
  const double dF = noneq_free_energy(rho, h, ctx) - noneq_free_energy(gibbs, h, ctx);
  return WorkValue{dF, WorkKind::isothermal_bound};
}

double isothermal_work_residual(const DensityOperator& rho,
                                const HermitianOperator& h,
                                const ThermalContext& ctx) {
  DensityOperator gibbs = gibbs_state(h, ctx);
  const double dF = noneq_free_energy(rho, h, ctx) - noneq_free_energy(gibbs, h, ctx);
  const double dRel = ctx.kT() * relative_entropy(rho, gibbs);
  return dF - dRel;
}

std::pair<DensityOperator, WorkValue> passive_state_and_ergotropy(
    const DensityOperator& rho, const HermitianOperator& h) {
  if (rho.dim() != h.dim()) {
    throw dimension_error("passive_state_and_ergotropy: dimension mismatch");
  }
  Eigensystem hr = hermitian_eigensystem(rho.matrix());
  Eigensystem hh = hermitian_eigensystem(h);

  // State eigenvalues descending; solver order is ascending, so reverse.
  Eigen::VectorXd pops(hr.values.size());
  for (Eigen::Index i = 0; i < pops.size(); ++i) {
    pops(i) = std::max(hr.values(pops.size() - 1 - i), 0.0);
  }
  pops /= pops.sum();

  ComplexSquareMatrix passive =
      hh.vectors * pops.asDiagonal() * hh.vectors.adjoint();
  const double before = (h.matrix() * rho.matrix()).trace().real();
  const double after = pops.dot(hh.values);
  return {DensityOperator::unchecked(passive),
          WorkValue{before - after, WorkKind::ergotropy}};
}

double beta_star(const DensityOperator& rho, const HermitianOperator& h) {
  if (rho.dim() != h.dim()) {
    throw dimension_error("beta_star: dimension mismatch");
  }
  const double target = von_neumann_entropy(rho);
  const double smax = std::log(static_cast<double>(rho.dim()));
  if (target <= 1e-12) {
    throw pure_state_error("beta_star: pure state, matching beta is unbounded");
  }
  if (std::abs(target - smax) <= 1e-12) {
    return 0.0;
  }
  Eigensystem es = hermitian_eigensystem(h);
  const double spread = es.values.maxCoeff() - es.values.minCoeff();
  if (spread < kernel_cutoff) {
    throw no_solution_error(
        "beta_star: fully degenerate Hamiltonian cannot match this entropy");
  }

  double lo = std::log(1e-6);
  double hi = std::log(1e6);
  // S(Gibbs(beta)) decreases in beta, so f decreases in t = ln beta.
  auto f = [&](double t) {
    return gibbs_entropy_of_spectrum(es.values, std::exp(t)) - target;
  };
  if (f(lo) <= 0.0 || f(hi) >= 0.0) {
    throw no_solution_error("beta_star: no match inside the bisection bracket");
  }
  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::abs(fm) <= 1e-12 || hi - lo < 1e-15) {
      break;
    }
    if (fm > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double beta = std::exp(mid);
  if (std::abs(gibbs_entropy_of_spectrum(es.values, beta) - target) > 1e-10) {
    throw no_solution_error("beta_star: bisection failed to reach tolerance");
  }
  return beta;
}

ErgotropyComparison ergotropy_vs_isothermal(const DensityOperator& rho,
                                            const HermitianOperator& h,
                                            const ThermalContext& ctx) {
  const double bs = beta_star(rho, h);
  WorkValue w_beta = isothermal_extractable_work(rho, h, ctx);

  Eigensystem es = hermitian_eigensystem(h);
  const double before = (h.matrix() * rho.matrix()).trace().real();
  // beta_star = 0 means the maximally mixed state; the spectrum mean is the
  // beta -> 0 limit of the Gibbs mean energy.
  const double after = bs > 0.0 ? gibbs_mean_energy_of_spectrum(es.values, bs)
                                : es.values.mean();
  const double w_max = before - after;
  return ErgotropyComparison{w_beta, WorkValue{w_max, WorkKind::ergotropy},
                             w_beta.value - w_max};
}

}  // namespace qthermo
