// Times the parallel measurement-search kernels against the serial
// reference implementations and checks that both return the same numbers.
// Run directly; prints one table row per case.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qthermo/correlations.hpp"
#include "qthermo/operator_algebra.hpp"
#include "qthermo/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Case {
  std::string label;
  qthermo::BipartiteDensityOperator state;
};

void bench_grid(const Case& c, int grid) {
  const auto t0 = Clock::now();
  const double serial = qthermo::brute_force_J_serial(c.state, grid);
  const double t_serial = seconds_since(t0);

  const auto t1 = Clock::now();
  const double parallel = qthermo::brute_force_J(c.state, grid);
  const double t_parallel = seconds_since(t1);

  std::printf("grid %-4d %-22s serial %7.3f s  parallel %7.3f s  x%.2f  |dJ| %.2e\n",
              grid, c.label.c_str(), t_serial, t_parallel,
              t_serial / t_parallel, std::abs(serial - parallel));
}

void bench_search(const Case& c, int restarts) {
  qthermo::SearchSettings settings;
  settings.restarts = restarts;
  settings.seed = 17;

  settings.parallel = false;
  const auto t0 = Clock::now();
  const auto serial = qthermo::maximize_classical_correlations(c.state, settings);
  const double t_serial = seconds_since(t0);

  settings.parallel = true;
  const auto t1 = Clock::now();
  const auto parallel = qthermo::maximize_classical_correlations(c.state, settings);
  const double t_parallel = seconds_since(t1);

  std::printf("search %-4d %-20s serial %7.3f s  parallel %7.3f s  x%.2f  |dJ| %.2e\n",
              restarts, c.label.c_str(), t_serial, t_parallel,
              t_serial / t_parallel,
              std::abs(serial.classical_J - parallel.classical_J));
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled, serial build\n");
#endif

  using qthermo::ComplexSquareMatrix;
  ComplexSquareMatrix bell = ComplexSquareMatrix::Zero(4, 4);
  bell(0, 0) = bell(0, 3) = bell(3, 0) = bell(3, 3) = 0.5;
  ComplexSquareMatrix id4 = ComplexSquareMatrix::Identity(4, 4);
  const double p = 0.5;
  ComplexSquareMatrix werner = (1.0 - p) / 4.0 * id4 + p * bell;

  const std::vector<Case> cases = {
      {"werner(0.5)",
       qthermo::BipartiteDensityOperator(qthermo::validate_density(werner), 2, 2)},
      {"random_two_qubit(7)", qthermo::random_two_qubit_state(7)},
  };

  for (const auto& c : cases) {
    bench_grid(c, 240);
  }
  for (const auto& c : cases) {
    bench_search(c, 64);
  }
  return 0;
}
