#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "modeseek/dataset.hpp"
#include "modeseek/degenerate.hpp"
#include "modeseek/diagnostics.hpp"
#include "modeseek/meanshift.hpp"

namespace modeseek {

using json = nlohmann::json;

/// Malformed dataset CSV. `row` is the 1-based line number (0 when not tied
/// to a line).
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, std::size_t row)
      : std::runtime_error(row ? "line " + std::to_string(row) + ": " + what : what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Dataset CSV: header x1..xd plus optional `weight` and `bandwidth` columns.
inline DataSet read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!detail::trim(line).empty()) have_header = true;
  }
  if (!have_header) throw CsvError("empty CSV", 0);

  const auto header = detail::split_commas(line);
  std::map<int, std::size_t> coord_col;
  std::optional<std::size_t> weight_col, bandwidth_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = header[c];
    if (name == "weight") {
      if (weight_col) throw CsvError("duplicate weight column", lineno);
      weight_col = c;
    } else if (name == "bandwidth") {
      if (bandwidth_col) throw CsvError("duplicate bandwidth column", lineno);
      bandwidth_col = c;
    } else if (name.size() >= 2 && name[0] == 'x') {
      int idx = 0;
      const auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
      if (ec != std::errc() || ptr != name.data() + name.size() || idx < 1)
        throw CsvError("unexpected column '" + std::string(name) + "'", lineno);
      if (!coord_col.emplace(idx, c).second)
        throw CsvError("duplicate column '" + std::string(name) + "'", lineno);
    } else {
      throw CsvError("unexpected column '" + std::string(name) + "'", lineno);
    }
  }
  const int d = static_cast<int>(coord_col.size());
  if (d == 0) throw CsvError("header has no coordinate columns x1..xd", lineno);
  if (coord_col.rbegin()->first != d) throw CsvError("coordinate columns must be x1..xd", lineno);

  std::vector<double> coords, weights, bandwidths;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_commas(line);
    if (fields.size() != header.size())
      throw CsvError("expected " + std::to_string(header.size()) + " fields, got " +
                         std::to_string(fields.size()),
                     lineno);
    auto field = [&](std::size_t c) {
      const auto v = detail::parse_double(fields[c]);
      if (!v || !std::isfinite(*v))
        throw CsvError("bad number '" + std::string(fields[c]) + "' in column '" +
                           std::string(header[c]) + "'",
                       lineno);
      return *v;
    };
    for (const auto& [idx, c] : coord_col) coords.push_back(field(c));
    if (weight_col) {
      const double w = field(*weight_col);
      if (!(w > 0.0)) throw CsvError("weight must be positive", lineno);
      weights.push_back(w);
    }
    if (bandwidth_col) {
      const double h = field(*bandwidth_col);
      if (!(h > 0.0)) throw CsvError("bandwidth must be positive", lineno);
      bandwidths.push_back(h);
    }
    ++rows;
  }
  if (rows == 0) throw CsvError("CSV has no data rows", 0);

  Eigen::MatrixXd pts(static_cast<Eigen::Index>(rows), d);
  for (std::size_t r = 0; r < rows; ++r)
    for (int j = 0; j < d; ++j)
      pts(static_cast<Eigen::Index>(r), j) = coords[r * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)];
  std::optional<Eigen::VectorXd> w, h;
  if (weight_col) w = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(rows));
  if (bandwidth_col)
    h = Eigen::Map<Eigen::VectorXd>(bandwidths.data(), static_cast<Eigen::Index>(rows));
  return DataSet(std::move(pts), std::move(w), std::move(h));
}

inline DataSet read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open '" + path + "'", 0);
  return read_dataset_csv(in);
}

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Columns t, y1..yd, f, step_norm, grad_norm, f_check. When `keep` is given,
/// only states it accepts are written.
template <typename Keep>
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, Keep keep) {
  const auto d = traj.states.empty() ? traj.final_point.size() : traj.states.front().y.size();
  out << 't';
  for (Eigen::Index j = 0; j < d; ++j) out << ",y" << (j + 1);
  out << ",f,step_norm,grad_norm,f_check\n";
  for (const auto& s : traj.states) {
    if (!keep(s.t)) continue;
    out << s.t;
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << format_double(s.y(j));
    out << ',' << format_double(s.value) << ',' << format_double(s.step_norm) << ','
        << format_double(s.grad_norm) << ',' << format_double(s.f_check) << '\n';
  }
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  write_trajectory_csv(out, traj, [](std::size_t) { return true; });
}

/// Keeps every t up to 1000, then 180 per decade.
inline bool log_decimated(std::size_t t) {
  if (t <= 1000) return true;
  const double step = std::pow(10.0, std::floor(std::log10(static_cast<double>(t)))) / 20.0;
  return t % static_cast<std::size_t>(step) == 0;
}

inline json to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

inline json trajectory_sidecar_json(const Trajectory& traj) {
  return {
      {"stop_reason", std::string(to_string(traj.stop_reason))},
      {"iterations", traj.iterations},
      {"recorded_states", traj.states.size()},
      {"start", to_json(traj.start)},
      {"final_point", to_json(traj.final_point)},
      {"final_value", traj.final_value},
      {"over_relaxation", traj.over_relaxation},
      {"start_density_zero", traj.start_density_zero},
  };
}

inline json to_json(const EmpiricalFit& fit) {
  return {
      {"finite_convergence", fit.finite_convergence},
      {"usable_states", fit.usable_states},
      {"fit_window", {{"first_t", fit.window_first_t}, {"last_t", fit.window_last_t}}},
      {"fitted_position_slope", opt_json(fit.position_slope)},
      {"fitted_value_slope", opt_json(fit.value_slope)},
      {"q_hat", opt_json(fit.q_hat)},
  };
}

inline json to_json(const RateReport& r) {
  json j = {
      {"limit_point", to_json(r.limit_point)},
      {"limit_value", r.limit_value},
      {"stop_reason", std::string(to_string(r.stop_reason))},
      {"largest_hessian_eigenvalue", opt_json(r.largest_hessian_eigenvalue)},
      {"hessian_unavailable_at", opt_json(r.hessian_unavailable_at)},
      {"critical_kind", r.critical_kind ? json(std::string(to_string(*r.critical_kind))) : json(nullptr)},
      {"predicted_q", opt_json(r.predicted_q)},
      {"loja_exponent", opt_json(r.loja_exponent)},
      {"loja_exponent_upper_bound", opt_json(r.loja_exponent_upper_bound)},
      {"rate_class", r.rate_class ? json(std::string(to_string(*r.rate_class))) : json(nullptr)},
      {"predicted_position_slope", opt_json(r.predicted_position_slope)},
      {"predicted_value_slope", opt_json(r.predicted_value_slope)},
      {"fit_error", opt_json(r.fit_error)},
  };
  j.update(to_json(r.fit));
  return j;
}

inline json to_json(const DegenerateConfig& c) {
  return {
      {"positions", c.positions},
      {"m", c.m},
      {"vanish_through_order", c.vanish_through()},
      {"first_nonzero_order", c.first_nonzero_order()},
      {"theta", c.theta},
      {"residuals", c.residuals},
      {"next_even_residual", c.next_even_residual},
      {"newton_iterations", c.newton_iterations},
  };
}

inline json to_json(const CheckSummary& c) {
  return {{"violations", c.violations}, {"worst_margin", c.worst_margin}, {"worst_t", c.worst_t}};
}

inline json to_json(const AuditReport& a) {
  return {
      {"steps", a.steps},
      {"over_relaxation", a.over_relaxation},
      {"tolerance", a.tolerance},
      {"ascent", to_json(a.ascent)},
      {"sufficient_increase", to_json(a.sufficient_increase)},
      {"gradient_identity", to_json(a.gradient_identity)},
      {"worst_identity_rel_error", a.worst_identity_rel_error},
      {"min_f_check", a.min_f_check},
      {"passed", a.passed()},
  };
}

}  // namespace modeseek
