#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "privmech/eit_solver.hpp"
#include "privmech/infocore.hpp"
#include "privmech/oracle.hpp"

// Experiment driver: single-point comparisons against the brute-force
// baseline, budget sweeps, CSV/SVG emission, and the CLI entry point.

namespace privmech {

struct ExperimentConfig {
  Distribution p1;
  Distribution p2;
  std::optional<Distribution> w0;            // nullopt = uniform
  std::vector<std::pair<double, double>> eps_grid;
  GridSpec grid;
  LogBase log_base = LogBase::Natural;
  std::string output_path;

  // expands a fraction grid of min{H(p1), H(p2)} into budget pairs
  void set_fraction_grid(const std::vector<double>& fractions);
  void validate() const;
};

struct TradeoffPoint {
  double eps_target = 0.0;
  double eps_effective = 0.0;
  double utility_eit = 0.0;
  double utility_oracle = 0.0;
  double leak1 = 0.0;
  double leak2 = 0.0;
  std::string case_tag;
  double repair_scale = 1.0;
};

struct TradeoffCurve {
  std::vector<TradeoffPoint> points;
};

// Built-in distribution pairs used throughout the evaluation.
struct Preset {
  std::string name;
  Distribution p1;
  Distribution p2;
};
const std::vector<Preset>& presets();

// Solve at (eps1, eps2), measure the exact leakages of the returned
// mechanism, then run the oracle with both budgets set to the larger
// measured leakage.
TradeoffPoint compare_at(const ExperimentConfig& config, double eps1, double eps2);

TradeoffCurve sweep(const ExperimentConfig& config);

// Fixed column order, floats with 12 significant digits.
std::string curve_to_csv(const TradeoffCurve& curve, LogBase base = LogBase::Natural);

// Minimal two-polyline chart of the utility curves over eps_effective.
std::string curve_to_svg(const TradeoffCurve& curve, LogBase base = LogBase::Natural);

std::string format_significant(double value, int digits = 12);

// Subcommands: solve, oracle, sweep, compare. Exit 0 on success, 2 on
// validation errors, 3 on solver non-convergence.
int cli_main(int argc, const char* const* argv);

}  // namespace privmech
