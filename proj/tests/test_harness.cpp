#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "privmech/harness.hpp"

using namespace privmech;

namespace {

ExperimentConfig mirrored_config(double grid_step = 0.01) {
  ExperimentConfig cfg{Distribution({0.05, 0.95}),
                       Distribution({0.95, 0.05}),
                       std::nullopt,
                       {},
                       GridSpec{grid_step, 1e-12},
                       LogBase::Natural,
                       ""};
  return cfg;
}

int run_cli(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"privmech_cli"};
  argv.insert(argv.end(), args.begin(), args.end());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("presets encode the evaluation pairs") {
  const auto& table = presets();
  REQUIRE(table.size() == 4);
  CHECK(table[0].p1.probs() == std::vector<double>{0.95, 0.05});
  CHECK(table[0].p2.probs() == std::vector<double>{0.55, 0.45});
  CHECK(table[1].p1.probs() == std::vector<double>{0.05, 0.95});
  CHECK(table[1].p2.probs() == std::vector<double>{0.95, 0.05});
  CHECK(table[2].p1.probs() == std::vector<double>{0.45, 0.55});
  CHECK(table[2].p2.probs() == std::vector<double>{0.50, 0.50});
  CHECK(table[3].p1.probs() == std::vector<double>{0.05, 0.95});
  CHECK(table[3].p2.probs() == std::vector<double>{0.10, 0.90});
}

TEST_CASE("significant digit formatting") {
  CHECK(format_significant(0.5) == "0.5");
  CHECK(format_significant(1.0 / 3.0) == "0.333333333333");
  CHECK(format_significant(0.0) == "0");
}

TEST_CASE("compare_at") {
  ExperimentConfig cfg = mirrored_config();

  SUBCASE("zero budget gives zero utilities") {
    TradeoffPoint pt = compare_at(cfg, 0.0, 0.0);
    CHECK(pt.utility_eit == 0.0);
    CHECK(pt.utility_oracle <= 1e-14);
    CHECK(pt.eps_effective == 0.0);
    CHECK(pt.case_tag == "degenerate");
  }

  SUBCASE("effective budget caps the leakages") {
    TradeoffPoint pt = compare_at(cfg, 0.01, 0.01);
    CHECK(pt.leak1 <= pt.eps_effective + 1e-9);
    CHECK(pt.leak2 <= pt.eps_effective + 1e-9);
    CHECK(pt.eps_target == 0.01);
    CHECK(pt.case_tag == "both");
    CHECK(pt.utility_eit > 0.0);
    CHECK(pt.utility_oracle > 0.0);
  }
}

TEST_CASE("sweep") {
  ExperimentConfig cfg = mirrored_config();
  cfg.set_fraction_grid({0.02, 0.05, 0.1});

  TradeoffCurve curve = sweep(cfg);
  REQUIRE(curve.points.size() == 3);
  // monotone non-decreasing utilities along the budget grid
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    CHECK(curve.points[i].utility_eit >= curve.points[i - 1].utility_eit - 1e-12);
    CHECK(curve.points[i].utility_oracle >= curve.points[i - 1].utility_oracle - 1e-12);
  }

  const std::string csv1 = curve_to_csv(curve);
  const std::string csv2 = curve_to_csv(sweep(cfg));
  CHECK(csv1 == csv2);  // byte-identical on rerun
  CHECK(csv1.substr(0, csv1.find('\n')) ==
        "eps_target,eps_effective,utility_eit,utility_oracle,leak1,leak2,case_tag,"
        "repair_scale");

  // empty grid: header only
  ExperimentConfig empty = mirrored_config();
  const std::string csv_empty = curve_to_csv(sweep(empty));
  CHECK(csv_empty.find('\n') == csv_empty.size() - 1);

  // SVG has the two curves and axis labels
  const std::string svg = curve_to_svg(curve);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("utility") != std::string::npos);
  CHECK(svg.find("leakage") != std::string::npos);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg = mirrored_config();
  cfg.eps_grid = {{10.0, 10.0}};  // above min entropy
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.eps_grid = {{-0.1, 0.0}};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.eps_grid = {{0.01, 0.02}};
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("cli solve") {
  CHECK(run_cli({"solve", "--p1", "0.05,0.95", "--p2", "0.95,0.05", "--eps1", "0.01",
                 "--eps2", "0.01"}) == 0);
  // degenerate pair still succeeds
  CHECK(run_cli({"solve", "--p1", "0.5,0.5", "--p2", "0.5,0.5", "--eps1", "0.1",
                 "--eps2", "0.1"}) == 0);
  // simplex violation reported as validation failure
  CHECK(run_cli({"solve", "--p1", "0.6,0.5", "--p2", "0.95,0.05", "--eps1", "0.01",
                 "--eps2", "0.01"}) == 2);
  // malformed number
  CHECK(run_cli({"solve", "--p1", "0.5,x", "--p2", "0.95,0.05"}) == 2);
}

TEST_CASE("cli sweep writes csv and svg") {
  const std::string csv_path = "/tmp/privmech_test_sweep.csv";
  const std::string svg_path = "/tmp/privmech_test_sweep.svg";
  CHECK(run_cli({"sweep", "--preset", "mirrored", "--fractions", "0.05", "--fractions",
                 "0.1", "--grid-step", "0.01", "--out", csv_path.c_str(), "--svg",
                 svg_path.c_str()}) == 0);
  const std::string csv = slurp(csv_path);
  CHECK(csv.find("eps_target,") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(slurp(svg_path).find("<svg") == 0);
  std::remove(csv_path.c_str());
  std::remove(svg_path.c_str());
}

TEST_CASE("cli config file") {
  const std::string path = "/tmp/privmech_test_config.json";
  {
    std::ofstream out(path);
    out << R"({
      "p1": [0.05, 0.95],
      "p2": [0.95, 0.05],
      "w0": "uniform",
      "eps_grid": {"fractions": [0.05, 0.1]},
      "grid": {"step": 0.01, "feasibility_tol": 1e-12},
      "log_base": "natural",
      "output_path": "/tmp/privmech_test_config_out.csv"
    })";
  }
  CHECK(run_cli({"sweep", "--config", path.c_str()}) == 0);
  const std::string csv = slurp("/tmp/privmech_test_config_out.csv");
  CHECK(csv.find("eps_target,") == 0);
  std::remove(path.c_str());
  std::remove("/tmp/privmech_test_config_out.csv");

  CHECK(run_cli({"sweep", "--config", "/nonexistent/config.json"}) == 2);
}

TEST_CASE("bits flag rescales outputs") {
  ExperimentConfig cfg = mirrored_config();
  cfg.set_fraction_grid({0.05});
  TradeoffCurve curve = sweep(cfg);
  const std::string nats_csv = curve_to_csv(curve, LogBase::Natural);
  const std::string bits_csv = curve_to_csv(curve, LogBase::Two);
  CHECK(nats_csv != bits_csv);
  // second column of the first data row scales by 1/ln 2
  auto second_field = [](const std::string& csv) {
    const std::size_t line = csv.find('\n') + 1;
    const std::size_t comma = csv.find(',', line);
    return std::stod(csv.substr(comma + 1));
  };
  CHECK(second_field(bits_csv) ==
        doctest::Approx(second_field(nats_csv) / 0.6931471805599453).epsilon(1e-9));
}
