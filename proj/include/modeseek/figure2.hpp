#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "modeseek/degenerate.hpp"
#include "modeseek/diagnostics.hpp"
#include "modeseek/io.hpp"
#include "modeseek/meanshift.hpp"

namespace modeseek {

/// The four symmetric 1-D Gaussian (h = 1) rate experiments with mode at 0:
/// a non-degenerate pair, and datasets whose first non-vanishing derivative
/// at the mode has order 4, 6 and 8.
enum class Figure2Case { i, ii, iii, iv };

inline Figure2Case parse_figure2_case(std::string_view s) {
  if (s == "i") return Figure2Case::i;
  if (s == "ii") return Figure2Case::ii;
  if (s == "iii") return Figure2Case::iii;
  if (s == "iv") return Figure2Case::iv;
  throw std::invalid_argument("unknown case '" + std::string(s) + "'; expected i, ii, iii or iv");
}

inline std::string_view to_string(Figure2Case c) {
  switch (c) {
    case Figure2Case::i: return "i";
    case Figure2Case::ii: return "ii";
    case Figure2Case::iii: return "iii";
    case Figure2Case::iv: return "iv";
  }
  return "?";
}

inline constexpr double kCaseOnePosition = 0.95;
inline constexpr double kQTolerance = 1e-3;
inline constexpr double kSlopeRelTolerance = 0.10;

struct Figure2Options {
  std::optional<double> start;                 // 0.1 for case i, 0.5 otherwise
  std::optional<std::size_t> max_iterations;   // 1e5 for case i, 1e6 otherwise
};

struct Figure2Result {
  Figure2Case which = Figure2Case::i;
  std::vector<double> positions;
  std::optional<DegenerateConfig> config;
  double theta = 0.5;
  double start = 0.0;
  std::size_t max_iterations = 0;
  Trajectory trajectory;
  RateReport report;

  std::optional<double> expected_q;               // closed form a^2, case i
  std::optional<double> expected_position_slope;  // negative, cases ii-iv
  std::optional<double> expected_value_slope;
  bool q_pass = true;
  bool position_slope_pass = true;
  bool value_slope_pass = true;

  bool pass() const { return q_pass && position_slope_pass && value_slope_pass; }
};

inline bool within_relative(std::optional<double> fitted, double expected, double rel) {
  return fitted && std::abs(*fitted - expected) <= rel * std::abs(expected);
}

inline Figure2Result run_figure2(Figure2Case which, const Figure2Options& options = {}) {
  Figure2Result res;
  res.which = which;
  if (which == Figure2Case::i) {
    res.positions = {kCaseOnePosition};
    res.theta = 0.5;
  } else {
    const int m = which == Figure2Case::ii ? 1 : which == Figure2Case::iii ? 2 : 3;
    res.config = solve_degenerate_config(m);
    res.positions = res.config->positions;
    res.theta = res.config->theta;
  }
  res.start = options.start.value_or(which == Figure2Case::i ? 0.1 : 0.5);
  res.max_iterations =
      options.max_iterations.value_or(which == Figure2Case::i ? 100000 : 1000000);

  const DensityModel model(symmetric_dataset(res.positions), kernel_by_name("gaussian"), 1.0,
                           /*normalized=*/true);
  MSConfig cfg;
  cfg.max_iterations = res.max_iterations;
  Eigen::VectorXd start(1);
  start(0) = res.start;
  res.trajectory = ms_run(model, start, cfg);

  RateReportOptions ropt;
  ropt.limit_point = Eigen::VectorXd::Zero(1);
  ropt.theta = res.theta;
  res.report = make_rate_report(model, res.trajectory, ropt);

  if (which == Figure2Case::i) {
    res.expected_q = kCaseOnePosition * kCaseOnePosition;
    res.q_pass = res.report.fit.q_hat &&
                 std::abs(*res.report.fit.q_hat - *res.expected_q) <= kQTolerance;
  } else {
    res.expected_position_slope = -*res.report.predicted_position_slope;
    res.expected_value_slope = -*res.report.predicted_value_slope;
    res.position_slope_pass = within_relative(res.report.fit.position_slope,
                                              *res.expected_position_slope, kSlopeRelTolerance);
    res.value_slope_pass = within_relative(res.report.fit.value_slope,
                                           *res.expected_value_slope, kSlopeRelTolerance);
  }
  return res;
}

inline json to_json(const Figure2Result& r) {
  json j = {
      {"case", std::string(to_string(r.which))},
      {"kernel", "gaussian"},
      {"bandwidth", 1.0},
      {"dimension", 1},
      {"positions", r.positions},
      {"theta", r.theta},
      {"start", r.start},
      {"start_note", "initial point chosen by this tool; not taken from the original experiments"},
      {"max_iterations", r.max_iterations},
      {"trajectory", trajectory_sidecar_json(r.trajectory)},
      {"rate_report", to_json(r.report)},
      {"expected_q", opt_json(r.expected_q)},
      {"q_tolerance", kQTolerance},
      {"expected_position_slope", opt_json(r.expected_position_slope)},
      {"expected_value_slope", opt_json(r.expected_value_slope)},
      {"slope_relative_tolerance", kSlopeRelTolerance},
      {"q_pass", r.q_pass},
      {"position_slope_pass", r.position_slope_pass},
      {"value_slope_pass", r.value_slope_pass},
      {"pass", r.pass()},
  };
  if (r.config) j["degenerate_config"] = to_json(*r.config);
  return j;
}

}  // namespace modeseek
