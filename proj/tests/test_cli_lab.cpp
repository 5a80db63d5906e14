#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qthermo/cli_lab.hpp"
#include "qthermo/operator_algebra.hpp"

using namespace qthermo;
namespace fs = std::filesystem;

namespace {

constexpr double kLn2 = 0.6931471805599453;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("qthermo_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      cells.push_back(cell);
    }
    rows.push_back(cells);
  }
  return rows;
}

std::string validation_message(const std::string& config_text) {
  try {
    load_config(config_text);
  } catch (const config_validation_error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("a minimal config fills every default") {
  const ExperimentConfig cfg = load_config(
      R"({"experiment":"identities","state":{"name":"bell"},"beta":1.0})");
  CHECK(cfg.experiment == ExperimentKind::identities);
  CHECK(cfg.state.name == "bell");
  REQUIRE(cfg.betas.size() == 1);
  CHECK(cfg.betas[0] == 1.0);
  CHECK(!cfg.beta_is_sweep);
  REQUIRE(cfg.segment_counts.size() == 1);
  CHECK(cfg.segment_counts[0] == 1000);
  CHECK(!cfg.segments_is_sweep);
  CHECK(cfg.seed == 0);
  CHECK(cfg.k_B == 1.0);
  CHECK(cfg.alpha == 1e-10);
  CHECK(cfg.output_dir == ".");
  CHECK(!cfg.normalized.empty());
}

TEST_CASE("syntactically broken configs raise a parse error") {
  CHECK_THROWS_AS(load_config("{nope"), config_parse_error);
  CHECK_THROWS_AS(load_config(""), config_parse_error);
}

TEST_CASE("validation failures name the offending field") {
  CHECK(validation_message(R"({"state":{"name":"bell"},"beta":1.0})")
            .find("experiment") != std::string::npos);
  CHECK(validation_message(
            R"({"experiment":"identities","state":{"name":"bell"}})")
            .find("beta") != std::string::npos);
  CHECK(validation_message(
            R"({"experiment":"identities","state":{"name":"bell"},)"
            R"("beta":1.0,"bogus":3})")
            .find("bogus") != std::string::npos);
  CHECK(validation_message(
            R"({"experiment":"identities","state":{"name":"bell"},)"
            R"("beta":-2.0})")
            .find("beta") != std::string::npos);
  CHECK(validation_message(
            R"({"experiment":"identities","state":{"name":"werner",)"
            R"("p":1.5},"beta":1.0})")
            .find("state.p") != std::string::npos);
  CHECK(validation_message(
            R"({"experiment":"identities","state":{"name":"nonsense"},)"
            R"("beta":1.0})")
            .find("state.name") != std::string::npos);
  CHECK(validation_message(
            R"({"experiment":"identities","state":{"name":"bell"},)"
            R"("beta":1.0,"alpha":0.5})")
            .find("alpha") != std::string::npos);
}

TEST_CASE("sweep lists are tied to the experiments that read them") {
  CHECK(validation_message(
            R"({"experiment":"identities","state":{"name":"bell"},)"
            R"("beta":[0.5,1.0]})")
            .find("beta") != std::string::npos);
  CHECK(validation_message(
            R"({"experiment":"identities","state":{"name":"bell"},)"
            R"("beta":1.0,"N":[100,200]})")
            .find("N") != std::string::npos);
  CHECK(validation_message(
            R"({"experiment":"ergotropy_compare","state":{"name":"bell"},)"
            R"("beta":[0.5,1.0],"N":[100,200]})")
            .find("sweep") != std::string::npos);
  CHECK_NOTHROW(load_config(
      R"({"experiment":"ergotropy_compare","state":{"name":"bell"},)"
      R"("beta":[0.5,1.0,2.0]})"));
  CHECK_NOTHROW(load_config(
      R"({"experiment":"isothermal_sweep","state":{"name":"bell"},)"
      R"("beta":1.0,"N":[100,200]})"));
}

TEST_CASE("explicit state matrices are validated at load time") {
  CHECK(validation_message(
            R"({"experiment":"identities","beta":1.0,"state":{)"
            R"("name":"explicit","matrix":[)"
            R"([[1.5,0],[0,0],[0,0],[0,0]],)"
            R"([[0,0],[-0.5,0],[0,0],[0,0]],)"
            R"([[0,0],[0,0],[0,0],[0,0]],)"
            R"([[0,0],[0,0],[0,0],[0,0]]]}})")
            .find("state.matrix") != std::string::npos);
  CHECK(validation_message(
            R"({"experiment":"identities","beta":1.0,"state":{)"
            R"("name":"explicit","d_S":3,"d_A":2,"matrix":[)"
            R"([[0.5,0],[0,0],[0,0],[0,0]],)"
            R"([[0,0],[0.5,0],[0,0],[0,0]],)"
            R"([[0,0],[0,0],[0,0],[0,0]],)"
            R"([[0,0],[0,0],[0,0],[0,0]]]}})")
            .find("d_S") != std::string::npos);
}

TEST_CASE("state presets build the states they advertise") {
  StateSpec bell;
  bell.name = "bell";
  const BipartiteDensityOperator b = build_state(bell);
  CHECK(b.matrix()(0, 3).real() == doctest::Approx(0.5).epsilon(1e-15));

  StateSpec w0;
  w0.name = "werner";
  w0.werner_p = 0.0;
  CHECK(max_abs(build_state(w0).matrix() -
                0.25 * ComplexSquareMatrix::Identity(4, 4)) < 1e-15);

  StateSpec w1;
  w1.name = "werner";
  w1.werner_p = 1.0;
  CHECK(max_abs(build_state(w1).matrix() - b.matrix()) < 1e-15);

  StateSpec rand_state;
  rand_state.name = "random_two_qubit";
  rand_state.seed = 42;
  const BipartiteDensityOperator r1 = build_state(rand_state);
  const BipartiteDensityOperator r2 = build_state(rand_state);
  CHECK(max_abs(r1.matrix() - r2.matrix()) == 0.0);
}

TEST_CASE("the preset catalog lists every builder") {
  const auto catalog = preset_catalog();
  REQUIRE(catalog.size() == 6);
  CHECK(catalog.front().first == "bell");
  for (const auto& [name, blurb] : catalog) {
    CHECK(!blurb.empty());
  }
}

TEST_CASE("numbers format short, stable, and locale-free") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(1e-30) == "1e-30");
  CHECK(format_number(-0.25) == "-0.25");
}

TEST_CASE("csv writing round-trips and rejects empty tables") {
  const fs::path dir = fresh_dir("csv");
  const std::string path = (dir / "t.csv").string();
  emit_csv(path, {"a", "b"}, {{"1", "2"}, {"3", "4"}});
  CHECK(slurp(path) == "a,b\n1,2\n3,4\n");
  CHECK_THROWS_AS(emit_csv(path, {"a"}, {}), precondition_error);
  CHECK_THROWS_AS(emit_csv(path, {}, {{"1"}}), precondition_error);
  fs::remove_all(dir);
}

TEST_CASE("svg plots carry a polyline and one marker per point") {
  const fs::path dir = fresh_dir("svg");
  const std::string path = (dir / "t.svg").string();
  emit_svg(path, "a title", "xs", "ys",
           {{1.0, 2.0}, {2.0, 2.5}, {3.0, 1.5}, {4.0, 4.0}});
  const std::string svg = slurp(path);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("a title") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  std::size_t markers = 0;
  for (std::size_t pos = svg.find("<circle"); pos != std::string::npos;
       pos = svg.find("<circle", pos + 1)) {
    ++markers;
  }
  CHECK(markers == 4);
  CHECK_THROWS_AS(emit_svg(path, "t", "x", "y", {}), precondition_error);
  fs::remove_all(dir);
}

TEST_CASE("the identity run on the entangled pair passes and reproduces") {
  const fs::path dir_a = fresh_dir("ids_a");
  const fs::path dir_b = fresh_dir("ids_b");
  ExperimentConfig cfg = load_config(
      R"({"experiment":"identities","state":{"name":"bell"},"beta":1.0})");

  cfg.output_dir = dir_a.string();
  const RunManifest man = run_experiment(cfg);
  CHECK(man.all_pass);
  CHECK(man.identities.size() == 12);
  CHECK(man.error_message.empty());

  const auto manifest = nlohmann::json::parse(slurp(dir_a / "manifest.json"));
  CHECK(manifest.at("all_pass").get<bool>());
  CHECK(manifest.at("experiment").get<std::string>() == "identities");
  CHECK(manifest.at("config").at("state").at("name").get<std::string>() ==
        "bell");
  CHECK(manifest.at("quantities").at("discord").get<double>() ==
        doctest::Approx(kLn2).epsilon(1e-6));
  CHECK(manifest.at("quantities").at("total_budget").get<double>() ==
        doctest::Approx(3.0 * kLn2).epsilon(1e-6));

  const auto rows = parse_csv(slurp(dir_a / "results.csv"));
  REQUIRE(rows.size() == 13);
  CHECK(rows[0] == std::vector<std::string>{"identity", "residual",
                                            "tolerance", "pass"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][3] == "1");
  }

  cfg.output_dir = dir_b.string();
  run_experiment(cfg);
  CHECK(slurp(dir_a / "results.csv") == slurp(dir_b / "results.csv"));
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("a generic state breaks only the commuting-marginal shortcut") {
  const fs::path dir = fresh_dir("ids_rand");
  ExperimentConfig cfg = load_config(
      R"({"experiment":"identities",)"
      R"("state":{"name":"random_two_qubit","seed":3},"beta":1.0})");
  cfg.output_dir = dir.string();
  const RunManifest man = run_experiment(cfg);
  CHECK(!man.all_pass);
  for (const IdentityRow& row : man.identities) {
    if (row.name == "stroke_vs_discord") {
      CHECK(!row.pass);
      CHECK(row.residual > 1e-6);
    } else {
      CHECK(row.pass);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("the budget run reports the ledger of the winning basis") {
  const fs::path dir = fresh_dir("budget");
  ExperimentConfig cfg = load_config(
      R"({"experiment":"feedback_budget","state":{"name":"classical_mixture"},)"
      R"("beta":1.0})");
  cfg.output_dir = dir.string();
  const RunManifest man = run_experiment(cfg);
  CHECK(man.all_pass);
  double total = 0.0;
  bool seen = false;
  for (const auto& [name, value] : man.quantities) {
    if (name == "total_budget") {
      total = value;
      seen = true;
    }
  }
  REQUIRE(seen);
  CHECK(total == doctest::Approx(2.0 * kLn2).epsilon(1e-6));
  fs::remove_all(dir);
}

TEST_CASE("the step-count sweep converges with shrinking dissipation") {
  const fs::path dir = fresh_dir("sweep");
  ExperimentConfig cfg = load_config(
      R"({"experiment":"isothermal_sweep","beta":1.0,"N":[50,100],)"
      R"("state":{"name":"explicit","matrix":[)"
      R"([[0.15,0],[0,0],[0,0],[0,0]],)"
      R"([[0,0],[0.15,0],[0,0],[0,0]],)"
      R"([[0,0],[0,0],[0.35,0],[0,0]],)"
      R"([[0,0],[0,0],[0,0],[0.35,0]]]}})");
  cfg.output_dir = dir.string();
  const RunManifest man = run_experiment(cfg);
  CHECK(man.all_pass);

  const auto rows = parse_csv(slurp(dir / "results.csv"));
  REQUIRE(rows.size() == 3);
  const double d50 = std::stod(rows[1][2]);
  const double d100 = std::stod(rows[2][2]);
  CHECK(d50 > d100);
  CHECK(d100 > 0.0);
  const double w100 = std::stod(rows[2][1]);
  // The system marginal is diag(0.3, 0.7) against a unit level splitting.
  CHECK(w100 == doctest::Approx(0.40239738546332926).epsilon(2e-2));
  CHECK(fs::exists(dir / "plot.svg"));
  fs::remove_all(dir);
}

TEST_CASE("the joint stroke run stays under its ideal line") {
  const fs::path dir = fresh_dir("stroke");
  ExperimentConfig cfg = load_config(
      R"({"experiment":"discord_stroke","state":{"name":"bell"},)"
      R"("beta":1.0,"N":[400]})");
  cfg.output_dir = dir.string();
  const RunManifest man = run_experiment(cfg);
  CHECK(man.all_pass);
  const auto rows = parse_csv(slurp(dir / "results.csv"));
  REQUIRE(rows.size() == 2);
  const double extracted = std::stod(rows[1][1]);
  const double ideal = std::stod(rows[1][2]);
  const double bound = std::stod(rows[1][3]);
  CHECK(ideal == doctest::Approx(kLn2).epsilon(1e-6));
  CHECK(bound == doctest::Approx(kLn2).epsilon(1e-5));
  CHECK(extracted <= ideal);
  CHECK(extracted == doctest::Approx(kLn2).epsilon(5e-2));
  fs::remove_all(dir);
}

TEST_CASE("the temperature sweep reproduces the fixed two-level example") {
  const fs::path dir = fresh_dir("ergo");
  ExperimentConfig cfg = load_config(
      R"({"experiment":"ergotropy_compare","beta":[0.5,1.0,2.0],)"
      R"("state":{"name":"explicit","matrix":[)"
      R"([[0.15,0],[0,0],[0,0],[0,0]],)"
      R"([[0,0],[0.15,0],[0,0],[0,0]],)"
      R"([[0,0],[0,0],[0.35,0],[0,0]],)"
      R"([[0,0],[0,0],[0,0],[0.35,0]]]}})");
  cfg.output_dir = dir.string();
  const RunManifest man = run_experiment(cfg);
  CHECK(man.all_pass);

  double bs = 0.0;
  for (const auto& [name, value] : man.quantities) {
    if (name == "beta_star") {
      bs = value;
    }
  }
  CHECK(bs == doctest::Approx(0.8472978603872037).epsilon(1e-8));

  const auto rows = parse_csv(slurp(dir / "results.csv"));
  REQUIRE(rows.size() == 4);
  CHECK(std::stod(rows[2][0]) == 1.0);
  CHECK(std::stod(rows[2][1]) ==
        doctest::Approx(0.40239738546332926).epsilon(1e-9));
  CHECK(std::stod(rows[2][2]) == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(std::stod(rows[2][3]) ==
        doctest::Approx(0.0023973854633293).scale(0.0).epsilon(1e-4));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i][3]) >= -1e-12);
  }
  CHECK(fs::exists(dir / "plot.svg"));
  fs::remove_all(dir);
}

TEST_CASE("module failures are recorded in the manifest before rethrowing") {
  const fs::path dir = fresh_dir("modfail");
  // A pure system marginal has no entropy-matching temperature.
  ExperimentConfig cfg = load_config(
      R"({"experiment":"ergotropy_compare","beta":1.0,)"
      R"("state":{"name":"explicit","matrix":[)"
      R"([[0.5,0],[0,0],[0,0],[0,0]],)"
      R"([[0,0],[0.5,0],[0,0],[0,0]],)"
      R"([[0,0],[0,0],[0,0],[0,0]],)"
      R"([[0,0],[0,0],[0,0],[0,0]]]}})");
  cfg.output_dir = dir.string();
  CHECK_THROWS_AS(run_experiment(cfg), error);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(!manifest.at("all_pass").get<bool>());
  CHECK(!manifest.at("error").get<std::string>().empty());
  fs::remove_all(dir);
}
