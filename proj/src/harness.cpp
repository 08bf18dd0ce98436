#include "privmech/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

namespace privmech {

namespace {

constexpr double kLn2 = 0.6931471805599453;

double to_output(double nats, LogBase base) {
  return base == LogBase::Two ? nats / kLn2 : nats;
}

double to_nats(double value, LogBase base) {
  return base == LogBase::Two ? value * kLn2 : value;
}

double min_entropy(const Distribution& p1, const Distribution& p2) {
  return std::min(entropy(p1), entropy(p2));
}

std::vector<double> parse_vector(const std::string& text, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(field, "cannot parse '" + item + "' as a number");
    }
  }
  if (out.empty()) throw ValidationError(field, "empty vector");
  return out;
}

std::optional<Distribution> parse_w0(const std::string& text, std::size_t m) {
  if (text.empty() || text == "uniform") return std::nullopt;
  Distribution d(parse_vector(text, "w0"), "w0");
  if (d.size() != m) throw ValidationError("w0", "dimension mismatch with p1");
  return d;
}

}  // namespace

std::string format_significant(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, value);
  return buf;
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = {
      {"skewed-vs-balanced", Distribution({0.95, 0.05}), Distribution({0.55, 0.45})},
      {"mirrored", Distribution({0.05, 0.95}), Distribution({0.95, 0.05})},
      {"near-uniform", Distribution({0.45, 0.55}), Distribution({0.50, 0.50})},
      {"close-skewed", Distribution({0.05, 0.95}), Distribution({0.10, 0.90})},
  };
  return table;
}

void ExperimentConfig::set_fraction_grid(const std::vector<double>& fractions) {
  const double mh = min_entropy(p1, p2);
  eps_grid.clear();
  for (double f : fractions) {
    const double eps = f * mh;
    eps_grid.emplace_back(eps, eps);
  }
}

void ExperimentConfig::validate() const {
  if (p1.size() != p2.size()) throw ValidationError("p2", "dimension mismatch with p1");
  if (w0 && w0->size() != p1.size())
    throw ValidationError("w0", "dimension mismatch with p1");
  grid.validate();
  const double mh = min_entropy(p1, p2);
  for (const auto& [e1, e2] : eps_grid) {
    if (e1 < 0.0 || e1 > mh + 1e-12)
      throw ValidationError("eps_grid", "eps1 outside [0, min entropy]");
    if (e2 < 0.0 || e2 > mh + 1e-12)
      throw ValidationError("eps_grid", "eps2 outside [0, min entropy]");
  }
}

TradeoffPoint compare_at(const ExperimentConfig& config, double eps1, double eps2) {
  EitSolution sol = solve(config.p1, config.p2, eps1, eps2, config.w0);
  TradeoffPoint pt;
  pt.eps_target = std::max(eps1, eps2);
  pt.leak1 = sol.exact_leak1;
  pt.leak2 = sol.exact_leak2;
  pt.eps_effective = std::max(sol.exact_leak1, sol.exact_leak2);
  pt.utility_eit = sol.exact_utility;
  pt.case_tag = sol.degenerate ? "degenerate" : to_string(sol.active_case.tag);
  pt.repair_scale = sol.repair_scale;
  if (config.p1.size() == 2) {
    pt.utility_oracle =
        oracle_solve_binary(config.p1, config.p2, pt.eps_effective, pt.eps_effective,
                            config.grid)
            .utility;
  } else {
    pt.utility_oracle = oracle_solve_general(config.p1, config.p2, pt.eps_effective,
                                             pt.eps_effective, config.grid,
                                             config.p1.size())
                            .utility;
  }
  return pt;
}

TradeoffCurve sweep(const ExperimentConfig& config) {
  config.validate();
  TradeoffCurve curve;
  curve.points.reserve(config.eps_grid.size());
  for (const auto& [e1, e2] : config.eps_grid)
    curve.points.push_back(compare_at(config, e1, e2));
  return curve;
}

std::string curve_to_csv(const TradeoffCurve& curve, LogBase base) {
  std::string out =
      "eps_target,eps_effective,utility_eit,utility_oracle,leak1,leak2,case_tag,"
      "repair_scale\n";
  for (const auto& p : curve.points) {
    out += format_significant(to_output(p.eps_target, base)) + ",";
    out += format_significant(to_output(p.eps_effective, base)) + ",";
    out += format_significant(to_output(p.utility_eit, base)) + ",";
    out += format_significant(to_output(p.utility_oracle, base)) + ",";
    out += format_significant(to_output(p.leak1, base)) + ",";
    out += format_significant(to_output(p.leak2, base)) + ",";
    out += p.case_tag + ",";
    out += format_significant(p.repair_scale) + "\n";
  }
  return out;
}

std::string curve_to_svg(const TradeoffCurve& curve, LogBase base) {
  const int width = 640, height = 480, margin = 60;
  double xmax = 0.0, ymax = 0.0;
  for (const auto& p : curve.points) {
    xmax = std::max(xmax, to_output(p.eps_effective, base));
    ymax = std::max(ymax, to_output(std::max(p.utility_eit, p.utility_oracle), base));
  }
  if (xmax <= 0.0) xmax = 1.0;
  if (ymax <= 0.0) ymax = 1.0;
  auto sx = [&](double x) { return margin + x / xmax * (width - 2 * margin); };
  auto sy = [&](double y) { return height - margin - y / ymax * (height - 2 * margin); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
      << width - margin << "\" y2=\"" << height - margin
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  const std::string unit = base == LogBase::Two ? "bits" : "nats";
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 15
      << "\" text-anchor=\"middle\">effective leakage (" << unit << ")</text>\n";
  svg << "<text x=\"20\" y=\"" << height / 2 << "\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 20 " << height / 2 << ")\">utility (" << unit
      << ")</text>\n";
  svg << "<text x=\"" << margin << "\" y=\"" << height - margin + 20 << "\">0</text>\n";
  svg << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 20
      << "\" text-anchor=\"end\">" << format_significant(xmax, 4) << "</text>\n";
  svg << "<text x=\"" << margin - 5 << "\" y=\"" << margin
      << "\" text-anchor=\"end\">" << format_significant(ymax, 4) << "</text>\n";

  auto polyline = [&](const char* color, bool oracle) {
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (const auto& p : curve.points)
      svg << sx(to_output(p.eps_effective, base)) << ","
          << sy(to_output(oracle ? p.utility_oracle : p.utility_eit, base)) << " ";
    svg << "\"/>\n";
  };
  polyline("steelblue", false);
  polyline("firebrick", true);
  svg << "<text x=\"" << margin + 10 << "\" y=\"" << margin + 10
      << "\" fill=\"steelblue\">closed form</text>\n";
  svg << "<text x=\"" << margin + 10 << "\" y=\"" << margin + 28
      << "\" fill=\"firebrick\">grid search</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

namespace {

using nlohmann::json;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
  if (!out) throw std::runtime_error("failed writing output file: " + path);
}

json solution_to_json(const EitSolution& sol, LogBase base) {
  json j;
  j["w0"] = sol.w0.probs();
  j["alpha"] = sol.alpha;
  j["v"] = sol.v;
  j["case"] = sol.degenerate ? "degenerate" : to_string(sol.active_case.tag);
  j["eta1"] = sol.active_case.eta1;
  j["eta2"] = sol.active_case.eta2;
  j["mechanism"] = sol.mechanism.rows();
  j["repair_scale"] = sol.repair_scale;
  j["exact_utility"] = to_output(sol.exact_utility, base);
  j["exact_leak1"] = to_output(sol.exact_leak1, base);
  j["exact_leak2"] = to_output(sol.exact_leak2, base);
  j["approx_utility"] = to_output(sol.approx_utility, base);
  return j;
}

json point_to_json(const TradeoffPoint& pt, LogBase base) {
  json j;
  j["eps_target"] = to_output(pt.eps_target, base);
  j["eps_effective"] = to_output(pt.eps_effective, base);
  j["utility_eit"] = to_output(pt.utility_eit, base);
  j["utility_oracle"] = to_output(pt.utility_oracle, base);
  j["leak1"] = to_output(pt.leak1, base);
  j["leak2"] = to_output(pt.leak2, base);
  j["case_tag"] = pt.case_tag;
  j["repair_scale"] = pt.repair_scale;
  return j;
}

struct CommonArgs {
  std::string p1_text, p2_text, w0_text = "uniform", preset_name;
  double eps1 = 0.0, eps2 = 0.0;
  double grid_step = 1e-3;
  bool bits = false;
  std::string out_path, svg_path, config_path;
  std::vector<double> fractions;
};

ExperimentConfig config_from_json(const json& j) {
  auto vec = [](const json& v) { return v.get<std::vector<double>>(); };
  if (!j.contains("p1") || !j.contains("p2"))
    throw ValidationError("config", "p1 and p2 are required");
  ExperimentConfig cfg{Distribution(vec(j.at("p1")), "p1"),
                       Distribution(vec(j.at("p2")), "p2"),
                       std::nullopt,
                       {},
                       GridSpec{},
                       LogBase::Natural,
                       ""};
  if (j.contains("w0") && !(j.at("w0").is_string() && j.at("w0") == "uniform")) {
    Distribution w0(vec(j.at("w0")), "w0");
    cfg.w0 = w0;
  }
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    if (g.contains("step")) cfg.grid.step = g.at("step").get<double>();
    if (g.contains("feasibility_tol"))
      cfg.grid.feasibility_tol = g.at("feasibility_tol").get<double>();
  }
  if (j.contains("log_base")) {
    const std::string b = j.at("log_base").get<std::string>();
    if (b == "bits") cfg.log_base = LogBase::Two;
    else if (b == "natural") cfg.log_base = LogBase::Natural;
    else throw ValidationError("log_base", "must be 'natural' or 'bits'");
  }
  if (j.contains("output_path")) cfg.output_path = j.at("output_path").get<std::string>();
  if (j.contains("eps_grid")) {
    const json& eg = j.at("eps_grid");
    if (eg.is_object() && eg.contains("fractions")) {
      cfg.set_fraction_grid(eg.at("fractions").get<std::vector<double>>());
    } else if (eg.is_array()) {
      for (const json& pair : eg) {
        if (!pair.is_array() || pair.size() != 2)
          throw ValidationError("eps_grid", "entries must be [eps1, eps2] pairs");
        double e1 = to_nats(pair[0].get<double>(), cfg.log_base);
        double e2 = to_nats(pair[1].get<double>(), cfg.log_base);
        cfg.eps_grid.emplace_back(e1, e2);
      }
    } else {
      throw ValidationError("eps_grid", "must be an array of pairs or {\"fractions\": [...]}");
    }
  }
  return cfg;
}

ExperimentConfig build_config(const CommonArgs& args) {
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw ValidationError("config", "cannot open " + args.config_path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ValidationError("config", std::string("invalid JSON: ") + e.what());
    }
    return config_from_json(j);
  }
  std::optional<Distribution> p1, p2;
  if (!args.preset_name.empty()) {
    for (const Preset& p : presets()) {
      if (p.name == args.preset_name) {
        p1 = p.p1;
        p2 = p.p2;
      }
    }
    if (!p1) throw ValidationError("preset", "unknown preset '" + args.preset_name + "'");
  } else {
    if (args.p1_text.empty() || args.p2_text.empty())
      throw ValidationError("p1", "provide --p1/--p2, --preset, or --config");
    p1 = Distribution(parse_vector(args.p1_text, "p1"), "p1");
    p2 = Distribution(parse_vector(args.p2_text, "p2"), "p2");
  }
  const LogBase base = args.bits ? LogBase::Two : LogBase::Natural;
  ExperimentConfig cfg{*p1, *p2, parse_w0(args.w0_text, p1->size()),
                       {},   GridSpec{args.grid_step, 1e-12},
                       base, args.out_path};
  if (!args.fractions.empty()) {
    cfg.set_fraction_grid(args.fractions);
  } else {
    cfg.eps_grid.emplace_back(to_nats(args.eps1, base), to_nats(args.eps2, base));
  }
  return cfg;
}

void add_common_flags(CLI::App* cmd, CommonArgs& args, bool budgets) {
  cmd->add_option("--p1", args.p1_text, "first source distribution, comma separated");
  cmd->add_option("--p2", args.p2_text, "second source distribution, comma separated");
  cmd->add_option("--preset", args.preset_name,
                  "built-in distribution pair (skewed-vs-balanced, mirrored, "
                  "near-uniform, close-skewed)");
  cmd->add_option("--w0", args.w0_text, "base output distribution or 'uniform'");
  cmd->add_flag("--bits", args.bits, "inputs and outputs in bits instead of nats");
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--out", args.out_path, "output file path");
  if (budgets) {
    cmd->add_option("--eps1", args.eps1, "leakage budget for the first source");
    cmd->add_option("--eps2", args.eps2, "leakage budget for the second source");
  }
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"privacy mechanism design for hypothesis testing under leakage budgets"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* cmd_solve = app.add_subcommand("solve", "closed-form solution, JSON to stdout");
  add_common_flags(cmd_solve, args, true);

  CLI::App* cmd_oracle = app.add_subcommand("oracle", "grid-search baseline, JSON to stdout");
  add_common_flags(cmd_oracle, args, true);
  cmd_oracle->add_option("--grid-step", args.grid_step, "grid resolution");

  CLI::App* cmd_compare = app.add_subcommand("compare", "single tradeoff point, JSON to stdout");
  add_common_flags(cmd_compare, args, true);
  cmd_compare->add_option("--grid-step", args.grid_step, "grid resolution");

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "budget sweep to CSV (and optional SVG)");
  add_common_flags(cmd_sweep, args, false);
  cmd_sweep->add_option("--grid-step", args.grid_step, "grid resolution");
  cmd_sweep->add_option("--fractions", args.fractions,
                        "budget grid as fractions of min entropy");
  cmd_sweep->add_option("--svg", args.svg_path, "also write an SVG chart here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = build_config(args);
    const LogBase base = cfg.log_base;

    if (cmd_solve->parsed()) {
      const auto [e1, e2] = cfg.eps_grid.empty() ? std::pair{0.0, 0.0} : cfg.eps_grid.front();
      EitSolution sol = solve(cfg.p1, cfg.p2, e1, e2, cfg.w0);
      std::cout << solution_to_json(sol, base).dump(2) << "\n";
    } else if (cmd_oracle->parsed()) {
      const auto [e1, e2] = cfg.eps_grid.empty() ? std::pair{0.0, 0.0} : cfg.eps_grid.front();
      OracleResult res =
          cfg.p1.size() == 2
              ? oracle_solve_binary(cfg.p1, cfg.p2, e1, e2, cfg.grid)
              : oracle_solve_general(cfg.p1, cfg.p2, e1, e2, cfg.grid, cfg.p1.size());
      json j;
      j["mechanism"] = res.mechanism.rows();
      j["utility"] = to_output(res.utility, base);
      std::cout << j.dump(2) << "\n";
    } else if (cmd_compare->parsed()) {
      cfg.validate();
      const auto [e1, e2] = cfg.eps_grid.empty() ? std::pair{0.0, 0.0} : cfg.eps_grid.front();
      TradeoffPoint pt = compare_at(cfg, e1, e2);
      std::cout << point_to_json(pt, base).dump(2) << "\n";
    } else if (cmd_sweep->parsed()) {
      TradeoffCurve curve = sweep(cfg);
      const std::string csv = curve_to_csv(curve, base);
      const std::string out = !args.out_path.empty() ? args.out_path : cfg.output_path;
      if (out.empty()) {
        std::cout << csv;
      } else {
        write_file(out, csv);
      }
      if (!args.svg_path.empty()) write_file(args.svg_path, curve_to_svg(curve, base));
    }
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace privmech
