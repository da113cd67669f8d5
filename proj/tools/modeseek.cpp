// modeseek: mean-shift runs, clustering, kernel catalog and the degenerate
// convergence-rate experiments, emitting CSV/JSON for plotting.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "modeseek/modeseek.hpp"

namespace fs = std::filesystem;
using namespace modeseek;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitComparisonFailed = 3;

struct RunArgs {
  std::string data;
  std::string kernel = "gaussian";
  double bandwidth = 1.0;
  std::string start = "each-datapoint";
  double zeta = 1.0;
  double tol = 1e-12;
  std::size_t max_iter = 100000;
  std::optional<double> merge_tol;
  std::string out = ".";
  bool normalized = false;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << j.dump(2) << '\n';
}

Eigen::VectorXd parse_point(const std::string& text, Eigen::Index d) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = detail::parse_double(detail::trim(item));
    if (!v || !std::isfinite(*v)) throw std::invalid_argument("bad --start coordinate '" + item + "'");
    vals.push_back(*v);
  }
  if (static_cast<Eigen::Index>(vals.size()) != d)
    throw std::invalid_argument("--start has " + std::to_string(vals.size()) +
                                " coordinates, data has dimension " + std::to_string(d));
  return Eigen::Map<Eigen::VectorXd>(vals.data(), d);
}

int cmd_run(const RunArgs& a) {
  const KernelSpec* kernel = nullptr;
  try {
    kernel = &kernel_by_name(a.kernel);
  } catch (const UnknownKernel& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  std::optional<DataSet> data;
  try {
    data.emplace(read_dataset_csv(a.data));
  } catch (const std::exception& e) {
    std::cerr << "error: " << a.data << ": " << e.what() << '\n';
    return kExitInput;
  }

  MSConfig cfg;
  cfg.over_relaxation = a.zeta;
  cfg.step_tolerance = a.tol;
  cfg.max_iterations = a.max_iter;
  const DensityModel model(*data, *kernel, a.bandwidth, a.normalized);
  const fs::path out(a.out);
  fs::create_directories(out);

  if (a.start == "each-datapoint") {
    const auto res = cluster(model, cfg, a.merge_tol, default_thread_count());
    std::ofstream labels(out / "labels.csv");
    labels << "index,label\n";
    for (std::size_t i = 0; i < res.labels.size(); ++i) labels << i << ',' << res.labels[i] << '\n';
    std::ofstream modes(out / "modes.csv");
    modes << "mode";
    for (Eigen::Index j = 0; j < model.dim(); ++j) modes << ",y" << (j + 1);
    modes << ",f\n";
    for (std::size_t k = 0; k < res.modes.size(); ++k) {
      modes << k;
      for (Eigen::Index j = 0; j < model.dim(); ++j) modes << ',' << format_double(res.modes[k](j));
      modes << ',' << format_double(kde_value(model, res.modes[k])) << '\n';
    }
    std::size_t capped = 0;
    json reasons = json::array();
    for (auto r : res.stop_reasons) {
      reasons.push_back(std::string(to_string(r)));
      if (!converged(r)) ++capped;
    }
    write_json(out / "cluster.json",
               {{"kernel", kernel->name},
                {"bandwidth", a.bandwidth},
                {"merge_tolerance", a.merge_tol.value_or(default_merge_tolerance(model.data()))},
                {"clusters", res.modes.size()},
                {"seeds_at_iteration_cap", capped},
                {"stop_reasons", reasons}});
    std::cout << res.modes.size() << " cluster(s) from " << res.labels.size() << " seeds\n";
    return capped ? kExitNotConverged : kExitOk;
  }

  const Eigen::VectorXd start = parse_point(a.start, model.dim());
  const Trajectory traj = ms_run(model, start, cfg);
  {
    std::ofstream csv(out / "trajectory.csv");
    write_trajectory_csv(csv, traj);
  }
  write_json(out / "trajectory.json", trajectory_sidecar_json(traj));
  write_json(out / "audit.json", to_json(audit_trajectory(model, traj)));
  if (converged(traj.stop_reason))
    write_json(out / "rate_report.json", to_json(make_rate_report(model, traj)));
  std::cout << "stop: " << to_string(traj.stop_reason) << " after " << traj.iterations
            << " iteration(s); final point";
  for (Eigen::Index j = 0; j < traj.final_point.size(); ++j)
    std::cout << ' ' << format_double(traj.final_point(j));
  std::cout << '\n';
  return converged(traj.stop_reason) ? kExitOk : kExitNotConverged;
}

int cmd_figure2(const std::string& which, const std::string& out_dir) {
  Figure2Result res;
  try {
    res = run_figure2(parse_figure2_case(which));
  } catch (const NoConvergence& e) {
    std::cerr << "error: " << e.what() << "; residuals:";
    for (double r : e.residuals()) std::cerr << ' ' << format_double(r);
    std::cerr << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  const fs::path out(out_dir);
  fs::create_directories(out);
  const std::string stem = "figure2_" + which;
  {
    std::ofstream csv(out / (stem + "_trajectory.csv"));
    write_trajectory_csv(csv, res.trajectory, log_decimated);
  }
  write_json(out / (stem + ".json"), to_json(res));

  const auto& fit = res.report.fit;
  std::cout << "case " << which << ": " << res.trajectory.iterations << " iterations, stop "
            << to_string(res.trajectory.stop_reason) << '\n';
  if (res.expected_q)
    std::cout << "  q_hat " << (fit.q_hat ? format_double(*fit.q_hat) : "n/a") << " vs "
              << *res.expected_q << " (+-" << kQTolerance << ")\n";
  if (res.expected_position_slope)
    std::cout << "  position slope "
              << (fit.position_slope ? format_double(*fit.position_slope) : "n/a") << " vs "
              << *res.expected_position_slope << "\n  value slope "
              << (fit.value_slope ? format_double(*fit.value_slope) : "n/a") << " vs "
              << *res.expected_value_slope << '\n';
  std::cout << "  " << (res.pass() ? "PASS" : "FAIL") << '\n';
  return res.pass() ? kExitOk : kExitComparisonFailed;
}

const char* mark(bool b) { return b ? "✓" : "×"; }

std::string guarantee_cell(Guarantee g) {
  switch (g) {
    case Guarantee::guaranteed: return "yes";
    case Guarantee::conditional: return "conditional";
    case Guarantee::not_ensured: return "-";
  }
  return "?";
}

int cmd_kernels(int dim) {
  if (dim < 1) {
    std::cerr << "error: --dim must be >= 1\n";
    return kExitInput;
  }
  std::cout << std::left << std::setw(14) << "kernel" << std::setw(7) << "asm2" << std::setw(7)
            << "asm3" << std::setw(7) << "asm4" << std::setw(13) << "convergence"
            << std::setw(13) << "rate" << "theta_bound(d=" << dim << ")\n";
  for (const auto& k : kernel_catalog()) {
    const auto bound = loja_exponent_bound(k, dim);
    std::cout << std::left << std::setw(14) << k.name << std::setw(8) << mark(k.satisfies_asm2)
              << std::setw(8) << mark(k.satisfies_asm3) << std::setw(8) << mark(k.satisfies_asm4)
              << std::setw(13) << guarantee_cell(k.convergence) << std::setw(13)
              << guarantee_cell(k.rate) << (bound ? format_double(*bound) : std::string("-"))
              << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-shift mode seeking with convergence-rate diagnostics"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run mean shift from a start point or every data point");
  run_cmd->add_option("--data", run.data, "Dataset CSV (x1..xd, optional weight, bandwidth)")->required();
  run_cmd->add_option("--kernel", run.kernel, "Kernel name");
  run_cmd->add_option("--bandwidth", run.bandwidth, "Bandwidth h")->check(CLI::PositiveNumber);
  run_cmd->add_option("--start", run.start, "Comma-separated start point or 'each-datapoint'");
  run_cmd->add_option("--zeta", run.zeta, "Over-relaxation factor in (0,2)");
  run_cmd->add_option("--tol", run.tol, "Step-norm stopping tolerance")->check(CLI::PositiveNumber);
  run_cmd->add_option("--max-iter", run.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  run_cmd->add_option("--merge-tol", run.merge_tol, "Mode merge distance (default 1e-6 * diameter)");
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_flag("--normalized", run.normalized, "Report normalized density values");

  std::string fig_case = "i";
  std::string fig_out = ".";
  auto* fig_cmd = app.add_subcommand("figure2", "Reproduce a degenerate-mode rate experiment");
  fig_cmd->add_option("--case", fig_case, "i, ii, iii or iv")->required();
  fig_cmd->add_option("--out", fig_out, "Output directory");

  int dim = 1;
  auto* ker_cmd = app.add_subcommand("kernels", "Print the kernel catalog and assumption flags");
  ker_cmd->add_option("--dim", dim, "Dimension for the exponent bound column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*run_cmd) {
      if (!(run.zeta > 0.0 && run.zeta < 2.0)) {
        std::cerr << "error: --zeta must lie in (0, 2)\n";
        return kExitInput;
      }
      return cmd_run(run);
    }
    if (*fig_cmd) return cmd_figure2(fig_case, fig_out);
    if (*ker_cmd) return cmd_kernels(dim);
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
