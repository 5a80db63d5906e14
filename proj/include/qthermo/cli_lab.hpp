#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qthermo/operator_algebra.hpp"

namespace qthermo {

// Config document is not syntactically valid JSON.
struct config_parse_error : error {
  using error::error;
};
// Config parsed but a field is missing, mistyped, or out of range.
struct config_validation_error : error {
  using error::error;
};
struct io_error : error {
  using error::error;
};
// emit_csv / emit_svg called with nothing to write.
struct precondition_error : error {
  using error::error;
};

enum class ExperimentKind {
  identities,
  feedback_budget,
  discord_stroke,
  isothermal_sweep,
  ergotropy_compare,
};

// State selection: a named preset plus whichever parameters that preset
// reads. Unused fields keep their defaults.
struct StateSpec {
  std::string name;
  double werner_p = 0.5;
  ComplexSquareMatrix rho_S;   // product preset
  ComplexSquareMatrix rho_A;   // product preset
  ComplexSquareMatrix matrix;  // explicit preset
  int d_S = 2;
  int d_A = 2;
  std::uint64_t seed = 0;      // random_two_qubit preset
  // True when the state block pinned its own seed, so a run-level seed
  // override leaves the state alone.
  bool seed_pinned = false;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::identities;
  StateSpec state;
  std::vector<double> betas;       // one entry unless beta is swept
  bool beta_is_sweep = false;
  std::vector<int> segment_counts; // step counts; swept for the N sweeps
  bool segments_is_sweep = false;
  std::uint64_t seed = 0;
  double k_B = 1.0;
  double alpha = 1e-10;
  std::string output_dir = ".";
  // Canonical JSON echo with defaults filled, written into the manifest.
  std::string normalized;
};

struct IdentityRow {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct RunManifest {
  std::string experiment;
  std::string config_echo_json;
  std::string library_version;
  double wall_seconds = 0.0;
  std::vector<IdentityRow> identities;
  std::vector<std::pair<std::string, double>> quantities;
  bool all_pass = true;
  // Nonempty when a module error aborted the run; the manifest is still
  // written so the failure is on record.
  std::string error_message;

  std::string to_json() const;
};

ExperimentConfig load_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

BipartiteDensityOperator build_state(const StateSpec& spec);

// (name, synopsis) for every preset, in listing order.
std::vector<std::pair<std::string, std::string>> preset_catalog();

// 12 significant digits, decimal dot, locale-free.
std::string format_number(double v);

void emit_csv(const std::string& path, const std::vector<std::string>& header,
              const std::vector<std::vector<std::string>>& rows);

void emit_svg(const std::string& path, const std::string& title,
              const std::string& x_label, const std::string& y_label,
              const std::vector<std::pair<double, double>>& points);

// Runs the configured experiment, writes results.csv, manifest.json, and
// (for sweeps) plot.svg into cfg.output_dir, and returns the manifest.
RunManifest run_experiment(const ExperimentConfig& cfg);

}  // namespace qthermo
