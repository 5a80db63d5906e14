#include "qthermo/cli_lab.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qthermo/correlations.hpp"
#include "qthermo/feedback_protocols.hpp"
#include "qthermo/isothermal_engine.hpp"
#include "qthermo/rng.hpp"
#include "qthermo/thermodynamics.hpp"
#include "qthermo/version.hpp"

namespace qthermo {

namespace {

using nlohmann::json;

const char* experiment_tag(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::identities:
      return "identities";
    case ExperimentKind::feedback_budget:
      return "feedback_budget";
    case ExperimentKind::discord_stroke:
      return "discord_stroke";
    case ExperimentKind::isothermal_sweep:
      return "isothermal_sweep";
    case ExperimentKind::ergotropy_compare:
      return "ergotropy_compare";
  }
  return "unknown";
}

ExperimentKind parse_experiment_tag(const std::string& tag) {
  for (ExperimentKind k :
       {ExperimentKind::identities, ExperimentKind::feedback_budget,
        ExperimentKind::discord_stroke, ExperimentKind::isothermal_sweep,
        ExperimentKind::ergotropy_compare}) {
    if (tag == experiment_tag(k)) {
      return k;
    }
  }
  throw config_validation_error("experiment: unknown tag '" + tag + "'");
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known =
        std::any_of(allowed.begin(), allowed.end(),
                    [&](const char* k) { return it.key() == k; });
    if (!known) {
      throw config_validation_error(where + ": unknown field '" + it.key() +
                                    "'");
    }
  }
}

double require_positive_number(const json& v, const std::string& field) {
  if (!v.is_number()) {
    throw config_validation_error(field + ": expected a number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x) || x <= 0.0) {
    throw config_validation_error(field + ": must be finite and positive");
  }
  return x;
}

int require_step_count(const json& v, const std::string& field) {
  if (!v.is_number_integer()) {
    throw config_validation_error(field + ": expected an integer");
  }
  const long long n = v.get<long long>();
  if (n < 1 || n > 100000000) {
    throw config_validation_error(field + ": must lie in [1, 1e8]");
  }
  return static_cast<int>(n);
}

ComplexSquareMatrix parse_matrix(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) {
    throw config_validation_error(field +
                                  ": expected a nonempty array of rows");
  }
  const std::size_t d = v.size();
  ComplexSquareMatrix m(static_cast<Eigen::Index>(d),
                        static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < d; ++r) {
    const json& row = v[r];
    if (!row.is_array() || row.size() != d) {
      throw config_validation_error(field + ": matrix must be square");
    }
    for (std::size_t c = 0; c < d; ++c) {
      const json& cell = row[c];
      if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number() ||
          !cell[1].is_number()) {
        throw config_validation_error(
            field + ": entries must be [re, im] number pairs");
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          Complex(cell[0].get<double>(), cell[1].get<double>());
    }
  }
  return m;
}

json matrix_to_json(const ComplexSquareMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    }
    rows.push_back(row);
  }
  return rows;
}

StateSpec parse_state(const json& v, std::uint64_t fallback_seed) {
  if (!v.is_object()) {
    throw config_validation_error("state: expected an object");
  }
  if (!v.contains("name") || !v["name"].is_string()) {
    throw config_validation_error("state.name: required string");
  }
  StateSpec spec;
  spec.name = v["name"].get<std::string>();

  if (spec.name == "bell" || spec.name == "classical_mixture") {
    check_keys(v, "state", {"name"});
  } else if (spec.name == "werner") {
    check_keys(v, "state", {"name", "p"});
    if (!v.contains("p")) {
      throw config_validation_error("state.p: required for werner");
    }
    if (!v["p"].is_number()) {
      throw config_validation_error("state.p: expected a number");
    }
    spec.werner_p = v["p"].get<double>();
    if (!(spec.werner_p >= 0.0 && spec.werner_p <= 1.0)) {
      throw config_validation_error("state.p: must lie in [0, 1]");
    }
  } else if (spec.name == "product") {
    check_keys(v, "state", {"name", "rho_S", "rho_A"});
    if (!v.contains("rho_S") || !v.contains("rho_A")) {
      throw config_validation_error(
          "state: product preset needs rho_S and rho_A");
    }
    spec.rho_S = parse_matrix(v["rho_S"], "state.rho_S");
    spec.rho_A = parse_matrix(v["rho_A"], "state.rho_A");
    try {
      validate_density(spec.rho_S);
    } catch (const error& e) {
      throw config_validation_error(std::string("state.rho_S: ") + e.what());
    }
    try {
      validate_density(spec.rho_A);
    } catch (const error& e) {
      throw config_validation_error(std::string("state.rho_A: ") + e.what());
    }
  } else if (spec.name == "random_two_qubit") {
    check_keys(v, "state", {"name", "seed"});
    if (v.contains("seed")) {
      if (!v["seed"].is_number_integer() || v["seed"].get<long long>() < 0) {
        throw config_validation_error("state.seed: expected a nonnegative integer");
      }
      spec.seed = v["seed"].get<std::uint64_t>();
      spec.seed_pinned = true;
    } else {
      spec.seed = fallback_seed;
    }
  } else if (spec.name == "explicit") {
    check_keys(v, "state", {"name", "matrix", "d_S", "d_A"});
    if (!v.contains("matrix")) {
      throw config_validation_error("state.matrix: required for explicit");
    }
    spec.matrix = parse_matrix(v["matrix"], "state.matrix");
    if (v.contains("d_S")) {
      spec.d_S = require_step_count(v["d_S"], "state.d_S");
    }
    if (v.contains("d_A")) {
      spec.d_A = require_step_count(v["d_A"], "state.d_A");
    }
    if (static_cast<Eigen::Index>(spec.d_S) * spec.d_A != spec.matrix.rows()) {
      throw config_validation_error(
          "state: d_S * d_A must equal the matrix dimension");
    }
    try {
      validate_density(spec.matrix);
    } catch (const error& e) {
      throw config_validation_error(std::string("state.matrix: ") + e.what());
    }
  } else {
    throw config_validation_error("state.name: unknown preset '" + spec.name +
                                  "'");
  }
  return spec;
}

json serialize_state(const StateSpec& spec) {
  json s;
  s["name"] = spec.name;
  if (spec.name == "werner") {
    s["p"] = spec.werner_p;
  } else if (spec.name == "product") {
    s["rho_S"] = matrix_to_json(spec.rho_S);
    s["rho_A"] = matrix_to_json(spec.rho_A);
  } else if (spec.name == "random_two_qubit") {
    s["seed"] = spec.seed;
  } else if (spec.name == "explicit") {
    s["matrix"] = matrix_to_json(spec.matrix);
    s["d_S"] = spec.d_S;
    s["d_A"] = spec.d_A;
  }
  return s;
}

json serialize_config(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = experiment_tag(cfg.experiment);
  j["state"] = serialize_state(cfg.state);
  if (cfg.beta_is_sweep) {
    j["beta"] = cfg.betas;
  } else {
    j["beta"] = cfg.betas.front();
  }
  if (cfg.segments_is_sweep) {
    j["N"] = cfg.segment_counts;
  } else {
    j["N"] = cfg.segment_counts.front();
  }
  j["seed"] = cfg.seed;
  j["k_B"] = cfg.k_B;
  j["alpha"] = cfg.alpha;
  j["output_dir"] = cfg.output_dir;
  return j;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw io_error("cannot open " + path.string() + " for writing");
  }
  out << content;
  out.flush();
  if (!out) {
    throw io_error("write failed for " + path.string());
  }
}

// Runs f(i) for i in [0, n) with per-index output slots; any exception is
// replayed on the calling thread after the loop.
template <typename F>
void parallel_indexed(int n, const F& f) {
  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      f(i);
    } catch (...) {
#pragma omp critical
      failure = std::current_exception();
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

struct IdentityCollector {
  std::vector<IdentityRow> rows;

  void add(const std::string& name, double residual, double tolerance) {
    rows.push_back(
        IdentityRow{name, residual, tolerance,
                    std::abs(residual) <= tolerance});
  }
  void add(const std::string& name, const ResidualEntry& r) {
    add(name, r.value, r.tolerance);
  }
};

HermitianOperator zero_hamiltonian(int d) {
  return HermitianOperator(ComplexSquareMatrix::Zero(d, d));
}

HermitianOperator ladder_hamiltonian(int d) {
  ComplexSquareMatrix h = ComplexSquareMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    h(i, i) = Complex(i, 0.0);
  }
  return HermitianOperator(h);
}

std::vector<std::vector<std::string>> identity_csv_rows(
    const std::vector<IdentityRow>& rows) {
  std::vector<std::vector<std::string>> out;
  out.reserve(rows.size());
  for (const IdentityRow& r : rows) {
    out.push_back({r.name, format_number(r.residual),
                   format_number(r.tolerance), r.pass ? "1" : "0"});
  }
  return out;
}

}  // namespace

ExperimentConfig load_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_parse_error(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) {
    throw config_validation_error("config: top level must be an object");
  }
  check_keys(doc, "config",
             {"experiment", "state", "beta", "N", "seed", "k_B", "alpha",
              "output_dir"});

  ExperimentConfig cfg;
  if (!doc.contains("experiment") || !doc["experiment"].is_string()) {
    throw config_validation_error("experiment: required string");
  }
  cfg.experiment = parse_experiment_tag(doc["experiment"].get<std::string>());

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_integer() ||
        doc["seed"].get<long long>() < 0) {
      throw config_validation_error("seed: expected a nonnegative integer");
    }
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }

  if (!doc.contains("state")) {
    throw config_validation_error("state: required");
  }
  cfg.state = parse_state(doc["state"], cfg.seed);

  if (!doc.contains("beta")) {
    throw config_validation_error("beta: required");
  }
  const json& beta = doc["beta"];
  if (beta.is_array()) {
    if (beta.empty()) {
      throw config_validation_error("beta: sweep list must be nonempty");
    }
    for (std::size_t i = 0; i < beta.size(); ++i) {
      cfg.betas.push_back(
          require_positive_number(beta[i], "beta[" + std::to_string(i) + "]"));
    }
    cfg.beta_is_sweep = true;
  } else {
    cfg.betas.push_back(require_positive_number(beta, "beta"));
  }

  if (doc.contains("N")) {
    const json& n = doc["N"];
    if (n.is_array()) {
      if (n.empty()) {
        throw config_validation_error("N: sweep list must be nonempty");
      }
      for (std::size_t i = 0; i < n.size(); ++i) {
        cfg.segment_counts.push_back(
            require_step_count(n[i], "N[" + std::to_string(i) + "]"));
      }
      cfg.segments_is_sweep = true;
    } else {
      cfg.segment_counts.push_back(require_step_count(n, "N"));
    }
  } else {
    cfg.segment_counts.push_back(1000);
  }

  if (doc.contains("k_B")) {
    cfg.k_B = require_positive_number(doc["k_B"], "k_B");
  }
  if (doc.contains("alpha")) {
    cfg.alpha = require_positive_number(doc["alpha"], "alpha");
    if (cfg.alpha > 1e-3) {
      throw config_validation_error("alpha: must lie in (0, 1e-3]");
    }
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) {
      throw config_validation_error("output_dir: expected a string");
    }
    cfg.output_dir = doc["output_dir"].get<std::string>();
  }

  if (cfg.beta_is_sweep && cfg.segments_is_sweep) {
    throw config_validation_error(
        "config: beta and N cannot both be sweep lists");
  }
  if (cfg.beta_is_sweep &&
      cfg.experiment != ExperimentKind::ergotropy_compare) {
    throw config_validation_error(
        "beta: a sweep list is only supported for ergotropy_compare");
  }
  if (cfg.segments_is_sweep &&
      cfg.experiment != ExperimentKind::isothermal_sweep &&
      cfg.experiment != ExperimentKind::discord_stroke) {
    throw config_validation_error(
        "N: a sweep list is only supported for isothermal_sweep and "
        "discord_stroke");
  }

  cfg.normalized = serialize_config(cfg).dump(2);
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw io_error("cannot open config file " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config(buf.str());
}

BipartiteDensityOperator build_state(const StateSpec& spec) {
  if (spec.name == "bell") {
    ComplexSquareMatrix m = ComplexSquareMatrix::Zero(4, 4);
    m(0, 0) = m(0, 3) = m(3, 0) = m(3, 3) = 0.5;
    return BipartiteDensityOperator(DensityOperator(m), 2, 2);
  }
  if (spec.name == "classical_mixture") {
    ComplexSquareMatrix m = ComplexSquareMatrix::Zero(4, 4);
    m(0, 0) = m(3, 3) = 0.5;
    return BipartiteDensityOperator(DensityOperator(m), 2, 2);
  }
  if (spec.name == "werner") {
    if (!(spec.werner_p >= 0.0 && spec.werner_p <= 1.0)) {
      throw config_validation_error("state.p: must lie in [0, 1]");
    }
    ComplexSquareMatrix m =
        (1.0 - spec.werner_p) / 4.0 * ComplexSquareMatrix::Identity(4, 4);
    m(0, 0) += 0.5 * spec.werner_p;
    m(0, 3) += 0.5 * spec.werner_p;
    m(3, 0) += 0.5 * spec.werner_p;
    m(3, 3) += 0.5 * spec.werner_p;
    return BipartiteDensityOperator(DensityOperator(m), 2, 2);
  }
  if (spec.name == "product") {
    const DensityOperator rho_S(spec.rho_S);
    const DensityOperator rho_A(spec.rho_A);
    return BipartiteDensityOperator(
        DensityOperator(tensor_product(rho_S.matrix(), rho_A.matrix())),
        static_cast<int>(rho_S.dim()), static_cast<int>(rho_A.dim()));
  }
  if (spec.name == "random_two_qubit") {
    return random_two_qubit_state(spec.seed);
  }
  if (spec.name == "explicit") {
    return BipartiteDensityOperator(validate_density(spec.matrix), spec.d_S,
                                    spec.d_A);
  }
  throw config_validation_error("state.name: unknown preset '" + spec.name +
                                "'");
}

std::vector<std::pair<std::string, std::string>> preset_catalog() {
  return {
      {"bell", "maximally entangled two-qubit pair, (|00> + |11>)/sqrt(2)"},
      {"classical_mixture",
       "equal mixture of |00> and |11>; classically correlated only"},
      {"werner", "p * bell + (1 - p)/4 * identity; parameter: p in [0, 1]"},
      {"product", "rho_S tensor rho_A; parameters: rho_S, rho_A as [re, im] "
                  "matrices"},
      {"random_two_qubit",
       "full-rank random two-qubit state; parameter: seed (defaults to the "
       "run seed)"},
      {"explicit", "any density matrix as [re, im] pairs; parameters: "
                   "matrix, d_S, d_A"},
  };
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

void emit_csv(const std::string& path, const std::vector<std::string>& header,
              const std::vector<std::vector<std::string>>& rows) {
  if (header.empty() || rows.empty()) {
    throw precondition_error("emit_csv: nothing to write");
  }
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) {
      out += ',';
    }
    out += header[i];
  }
  out += '\n';
  for (const std::vector<std::string>& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) {
        out += ',';
      }
      out += row[i];
    }
    out += '\n';
  }
  write_text_file(path, out);
}

void emit_svg(const std::string& path, const std::string& title,
              const std::string& x_label, const std::string& y_label,
              const std::vector<std::pair<double, double>>& points) {
  if (points.empty()) {
    throw precondition_error("emit_svg: nothing to plot");
  }
  constexpr double width = 640.0, height = 480.0;
  constexpr double left = 80.0, right = 25.0, top = 45.0, bottom = 55.0;
  double x_min = points.front().first, x_max = x_min;
  double y_min = points.front().second, y_max = y_min;
  for (const auto& [x, y] : points) {
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  }
  if (x_max - x_min < 1e-300) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  if (y_max - y_min < 1e-300) {
    const double pad = std::max(std::abs(y_min) * 0.1, 0.5);
    y_min -= pad;
    y_max += pad;
  }
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  auto map_x = [&](double x) {
    return left + (x - x_min) / (x_max - x_min) * plot_w;
  };
  auto map_y = [&](double y) {
    return top + plot_h - (y - y_min) / (y_max - y_min) * plot_h;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
         "height=\"480\" viewBox=\"0 0 640 480\">\n";
  svg += "<rect width=\"640\" height=\"480\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"320\" y=\"26\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\" fill=\"#333\">" +
         title + "</text>\n";
  // axes
  svg += "<line x1=\"" + format_number(left) + "\" y1=\"" +
         format_number(top + plot_h) + "\" x2=\"" +
         format_number(left + plot_w) + "\" y2=\"" +
         format_number(top + plot_h) + "\" stroke=\"#333\"/>\n";
  svg += "<line x1=\"" + format_number(left) + "\" y1=\"" +
         format_number(top) + "\" x2=\"" + format_number(left) + "\" y2=\"" +
         format_number(top + plot_h) + "\" stroke=\"#333\"/>\n";
  // range labels
  svg += "<text x=\"" + format_number(left) + "\" y=\"" +
         format_number(height - 28) +
         "\" font-family=\"sans-serif\" font-size=\"12\" "
         "fill=\"#333\">" +
         format_number(x_min) + "</text>\n";
  svg += "<text x=\"" + format_number(left + plot_w) + "\" y=\"" +
         format_number(height - 28) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
         "fill=\"#333\">" +
         format_number(x_max) + "</text>\n";
  svg += "<text x=\"" + format_number(left - 6) + "\" y=\"" +
         format_number(top + plot_h) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
         "fill=\"#333\">" +
         format_number(y_min) + "</text>\n";
  svg += "<text x=\"" + format_number(left - 6) + "\" y=\"" +
         format_number(top + 12) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
         "fill=\"#333\">" +
         format_number(y_max) + "</text>\n";
  // axis captions
  svg += "<text x=\"" + format_number(left + plot_w / 2) + "\" y=\"" +
         format_number(height - 10) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" fill=\"#333\">" +
         x_label + "</text>\n";
  svg += "<text x=\"18\" y=\"" + format_number(top + plot_h / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" fill=\"#333\" transform=\"rotate(-90 18 " +
         format_number(top + plot_h / 2) + ")\">" + y_label + "</text>\n";
  // data
  svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" "
         "points=\"";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) {
      svg += ' ';
    }
    svg += format_number(map_x(points[i].first)) + "," +
           format_number(map_y(points[i].second));
  }
  svg += "\"/>\n";
  for (const auto& [x, y] : points) {
    svg += "<circle cx=\"" + format_number(map_x(x)) + "\" cy=\"" +
           format_number(map_y(y)) + "\" r=\"3\" fill=\"#1f77b4\"/>\n";
  }
  svg += "</svg>\n";
  write_text_file(path, svg);
}

std::string RunManifest::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["config"] = json::parse(config_echo_json);
  j["library_version"] = library_version;
  j["wall_seconds"] = wall_seconds;
  json ids = json::array();
  for (const IdentityRow& r : identities) {
    ids.push_back({{"name", r.name},
                   {"residual", r.residual},
                   {"tolerance", r.tolerance},
                   {"pass", r.pass}});
  }
  j["identities"] = ids;
  json q = json::object();
  for (const auto& [name, value] : quantities) {
    q[name] = value;
  }
  j["quantities"] = q;
  j["all_pass"] = all_pass;
  if (!error_message.empty()) {
    j["error"] = error_message;
  }
  return j.dump(2);
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  RunManifest man;
  man.experiment = experiment_tag(cfg.experiment);
  man.config_echo_json = serialize_config(cfg).dump(2);
  man.library_version = library_version;

  const std::filesystem::path out_dir(cfg.output_dir);
  {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
      throw io_error("cannot create output directory " + out_dir.string() +
                     ": " + ec.message());
    }
  }

  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> csv_rows;
  std::vector<std::pair<double, double>> plot;
  std::string plot_title, plot_x, plot_y;
  IdentityCollector ids;

  try {
    const BipartiteDensityOperator rho = build_state(cfg.state);
    const ThermalContext ctx(cfg.betas.front(), cfg.k_B);
    SearchSettings settings;
    settings.seed = cfg.seed;

    switch (cfg.experiment) {
      case ExperimentKind::identities: {
        const HermitianOperator h_S = zero_hamiltonian(rho.d_S());
        const HermitianOperator h_A = zero_hamiltonian(rho.d_A());
        const HermitianOperator h_SA = joint_hamiltonian(h_S, h_A);

        ids.add("work_two_forms",
                isothermal_work_residual(rho.state(), h_SA, ctx),
                algebraic_tol);

        const CorrelationReport report =
            maximize_classical_correlations(rho, settings);
        const FeedbackScenario s{rho, h_S, h_A, ctx,
                                 report.optimal_measurement};

        const WorkLedger fb = feedback_extractable_work(s);
        ids.add("gain_vs_information", fb.residual("gain_vs_information"));
        ids.add("gain_nonnegative", fb.residual("gain_nonnegative"));

        const WorkLedger joint = joint_extractable_work(rho, h_S, h_A, ctx);
        ids.add("joint_decomposition", joint.residual("decomposition"));

        const WorkLedger deficit = discord_work_deficit(s);
        ids.add("deficit_identity", deficit.residual("deficit_identity"));

        const WorkLedger net = net_measurement_gain(s);
        ids.add("net_vs_entropy_form", net.residual("net_vs_entropy_form"));
        ids.add("entropy_vs_discord_form",
                net.residual("entropy_vs_discord_form"));
        ids.add("net_nonnegative", net.residual("net_nonnegative"));

        const WorkLedger stroke = discord_stroke_work(
            rho, h_S, h_A, ctx, report.optimal_measurement);
        ids.add("stroke_vs_discord", stroke.residual("stroke_vs_discord"));
        ids.add("stroke_identity", stroke.residual("stroke_identity"));

        const WorkLedger budget =
            total_feedback_budget(rho, h_S, h_A, ctx, settings);
        ids.add("assembly_vs_closed", budget.residual("assembly_vs_closed"));
        ids.add("assembly_identity", budget.residual("assembly_identity"));

        man.quantities = {
            {"mutual_information", report.mutual_information},
            {"classical_correlations", report.classical_J},
            {"discord", report.discord},
            {"joint_work", joint.at("joint_work").value},
            {"net_gain", net.at("net_gain").value},
            {"stroke_work", stroke.at("stroke_work").value},
            {"total_budget", budget.at("total_budget").value},
        };
        csv_header = {"identity", "residual", "tolerance", "pass"};
        csv_rows = identity_csv_rows(ids.rows);
        break;
      }

      case ExperimentKind::feedback_budget: {
        const HermitianOperator h_S = zero_hamiltonian(rho.d_S());
        const HermitianOperator h_A = zero_hamiltonian(rho.d_A());
        const WorkLedger budget =
            total_feedback_budget(rho, h_S, h_A, ctx, settings);
        ids.add("assembly_vs_closed", budget.residual("assembly_vs_closed"));
        ids.add("assembly_identity", budget.residual("assembly_identity"));
        for (const auto& [label, value] : budget.entries()) {
          man.quantities.emplace_back(label, value.value);
        }
        csv_header = {"identity", "residual", "tolerance", "pass"};
        csv_rows = identity_csv_rows(ids.rows);
        break;
      }

      case ExperimentKind::discord_stroke: {
        const HermitianOperator h_S = zero_hamiltonian(rho.d_S());
        const HermitianOperator h_A = zero_hamiltonian(rho.d_A());
        const CorrelationReport report =
            maximize_classical_correlations(rho, settings);
        const BipartiteDensityOperator target =
            decorrelation_target(rho, report.optimal_measurement);
        const KernelRegularization reg{cfg.alpha};
        const double bound = ctx.kT() * report.discord;

        const int n_points = static_cast<int>(cfg.segment_counts.size());
        std::vector<std::array<double, 2>> results(n_points);
        parallel_indexed(n_points, [&](int i) {
          const TrajectoryReport tr =
              run_joint_stroke(rho, target, h_S, h_A, cfg.segment_counts[i],
                               ctx, reg);
          results[i] = {tr.total_work_extracted, tr.ideal_work};
        });

        double worst_excess = 0.0;
        csv_header = {"N", "extracted_work", "ideal_work", "discord_bound"};
        for (int i = 0; i < n_points; ++i) {
          csv_rows.push_back({std::to_string(cfg.segment_counts[i]),
                              format_number(results[i][0]),
                              format_number(results[i][1]),
                              format_number(bound)});
          plot.emplace_back(cfg.segment_counts[i], results[i][0]);
          worst_excess =
              std::min(worst_excess, results[i][1] - results[i][0]);
        }
        ids.add("extraction_bounded", worst_excess, algebraic_tol);
        man.quantities = {
            {"mutual_information", report.mutual_information},
            {"classical_correlations", report.classical_J},
            {"discord", report.discord},
            {"discord_bound", bound},
        };
        plot_title = "Joint stroke extraction vs step count";
        plot_x = "N";
        plot_y = "extracted work";
        break;
      }

      case ExperimentKind::isothermal_sweep: {
        const DensityOperator rho_S = partial_trace(rho, Subsystem::A);
        const HermitianOperator h = ladder_hamiltonian(rho.d_S());
        const GibbsMapSpec map{};
        const KernelRegularization reg{cfg.alpha};

        const int n_points = static_cast<int>(cfg.segment_counts.size());
        std::vector<std::array<double, 3>> results(n_points);
        double ideal = 0.0;
        parallel_indexed(n_points, [&](int i) {
          const TrajectoryReport tr = run_isothermal_extraction(
              rho_S, h, cfg.segment_counts[i], map, ctx, reg);
          results[i] = {tr.total_work_extracted, tr.dissipation,
                        reversibility_profile(tr).first};
          if (i == 0) {
            ideal = tr.ideal_work;
          }
        });

        double worst_dissipation = 0.0;
        csv_header = {"N", "extracted_work", "dissipation",
                      "max_step_residual"};
        for (int i = 0; i < n_points; ++i) {
          csv_rows.push_back({std::to_string(cfg.segment_counts[i]),
                              format_number(results[i][0]),
                              format_number(results[i][1]),
                              format_number(results[i][2])});
          plot.emplace_back(cfg.segment_counts[i], results[i][0]);
          worst_dissipation = std::min(worst_dissipation, results[i][1]);
        }
        ids.add("dissipation_nonnegative", worst_dissipation, algebraic_tol);
        man.quantities = {{"ideal_work", ideal}};
        plot_title = "Isothermal extraction vs step count";
        plot_x = "N";
        plot_y = "extracted work";
        break;
      }

      case ExperimentKind::ergotropy_compare: {
        const DensityOperator rho_S = partial_trace(rho, Subsystem::A);
        const HermitianOperator h = ladder_hamiltonian(rho.d_S());
        const double bs = beta_star(rho_S, h);

        const int n_points = static_cast<int>(cfg.betas.size());
        std::vector<std::array<double, 4>> results(n_points);
        parallel_indexed(n_points, [&](int i) {
          const ThermalContext ctx_b(cfg.betas[i], cfg.k_B);
          const ErgotropyComparison cmp =
              ergotropy_vs_isothermal(rho_S, h, ctx_b);
          const double relation =
              cmp.gap - ctx_b.kT() * gibbs_relative_entropy(h, bs, cfg.betas[i]);
          results[i] = {cmp.w_beta.value, cmp.w_max.value, cmp.gap, relation};
        });

        double worst_relation = 0.0;
        double worst_gap = 0.0;
        csv_header = {"beta", "w_beta", "w_max", "gap"};
        for (int i = 0; i < n_points; ++i) {
          csv_rows.push_back({format_number(cfg.betas[i]),
                              format_number(results[i][0]),
                              format_number(results[i][1]),
                              format_number(results[i][2])});
          plot.emplace_back(cfg.betas[i], results[i][2]);
          if (std::abs(results[i][3]) > std::abs(worst_relation)) {
            worst_relation = results[i][3];
          }
          worst_gap = std::min(worst_gap, results[i][2]);
        }
        ids.add("gap_identity", worst_relation, 1e-8);
        ids.add("gap_nonnegative", worst_gap, algebraic_tol);
        man.quantities = {{"beta_star", bs}};
        plot_title = "Isothermal bound minus best entropy-preserving work";
        plot_x = "beta";
        plot_y = "gap";
        break;
      }
    }
  } catch (const error& e) {
    man.error_message = e.what();
    man.all_pass = false;
    man.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
    write_text_file(out_dir / "manifest.json", man.to_json());
    throw;
  }

  man.identities = ids.rows;
  man.all_pass =
      std::all_of(man.identities.begin(), man.identities.end(),
                  [](const IdentityRow& r) { return r.pass; });

  emit_csv((out_dir / "results.csv").string(), csv_header, csv_rows);
  if (!plot.empty()) {
    emit_svg((out_dir / "plot.svg").string(), plot_title, plot_x, plot_y,
             plot);
  }
  man.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  write_text_file(out_dir / "manifest.json", man.to_json());
  return man;
}

}  // namespace qthermo
