// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "modeseek/modeseek.hpp"
#include "oracles.hpp"

using namespace modeseek;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string opt(std::optional<double> v) { return v ? fmt("%.6g", *v) : "n/a"; }

Outcome figure_case_one() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_figure2(Figure2Case::i);
  const double secs = seconds_since(t0);
  const auto q = r.report.fit.q_hat;
  const bool at_zero = std::abs(r.trajectory.final_point(0)) < 1e-9;
  const bool q_ok = q && *q >= 0.9015 && *q <= 0.9035;
  return {at_zero && q_ok && secs < 1.0 && converged(r.trajectory.stop_reason),
          "q_hat=" + opt(q) + " final=" + fmt("%.3g", r.trajectory.final_point(0)) +
              " time=" + fmt("%.3fs", secs)};
}

Outcome slopes_detail(const Figure2Result& r, Outcome o) {
  o.detail += "position_slope=" + opt(r.report.fit.position_slope) + " (want " +
              opt(r.expected_position_slope) + ") value_slope=" + opt(r.report.fit.value_slope) +
              " (want " + opt(r.expected_value_slope) + ")";
  return o;
}

Outcome figure_case_two() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_figure2(Figure2Case::ii);
  const double secs = seconds_since(t0);
  const bool slopes = std::abs(*r.expected_position_slope + 0.5) < 1e-15 &&
                      std::abs(*r.expected_value_slope + 2.0) < 1e-15;
  Outcome o{r.pass() && slopes && secs < 5.0, "time=" + fmt("%.2fs ", secs)};
  return slopes_detail(r, o);
}

bool positions_near(const std::vector<double>& got, const std::vector<double>& want, double tol) {
  if (got.size() != want.size()) return false;
  for (std::size_t j = 0; j < got.size(); ++j)
    if (std::abs(got[j] - want[j]) > tol) return false;
  return true;
}

std::string positions_text(const std::vector<double>& p) {
  std::string s = "{";
  for (std::size_t j = 0; j < p.size(); ++j) s += (j ? ", " : "") + fmt("%.6f", p[j]);
  return s + "}";
}

Outcome figure_case_three() {
  const auto r = run_figure2(Figure2Case::iii);
  const bool pos = r.positions.size() == 3 && r.positions[0] == 0.564 &&
                   positions_near({r.positions[1], r.positions[2]}, {1.721, 2.801}, 1e-3);
  const bool theta = std::abs(r.theta - 5.0 / 6.0) < 1e-15;
  const bool slopes = std::abs(*r.expected_position_slope + 0.25) < 1e-12 &&
                      std::abs(*r.expected_value_slope + 1.5) < 1e-12;
  return slopes_detail(r, {pos && theta && slopes && r.pass(),
                           "positions=" + positions_text(r.positions) + " "});
}

Outcome figure_case_four() {
  const auto r = run_figure2(Figure2Case::iv);
  const bool pos = positions_near(r.positions, {0.651, 1.959, 3.243}, 1e-3);
  const bool theta = std::abs(r.theta - 7.0 / 8.0) < 1e-15;
  const bool slopes = std::abs(*r.expected_position_slope + 1.0 / 6.0) < 1e-12 &&
                      std::abs(*r.expected_value_slope + 4.0 / 3.0) < 1e-12;
  return slopes_detail(r, {pos && theta && slopes && r.pass(),
                           "positions=" + positions_text(r.positions) + " "});
}

Outcome epanechnikov_finite_time() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> nsize(2, 50);
  std::size_t runs = 0, worst = 0, failures = 0;
  for (int ds = 0; ds < 50; ++ds) {
    const int d = 1 + ds % 2;
    const int n = nsize(rng);
    const DensityModel model(DataSet(oracle::random_points(rng, n, d, 1.5)),
                             kernel_by_name("epanechnikov"), 1.0);
    MSConfig cfg;
    cfg.max_iterations = 200;
    // only an exactly zero step may end the run
    cfg.step_tolerance = std::numeric_limits<double>::denorm_min();
    cfg.record_trajectory = false;
    for (int i = 0; i < n; ++i) {
      const auto traj = ms_run(model, model.data().point(i), cfg);
      ++runs;
      worst = std::max(worst, traj.iterations);
      if (traj.stop_reason != StopReason::exact_fixed_point) ++failures;
    }
  }
  return {failures == 0, std::to_string(runs) + " runs, " + std::to_string(failures) +
                             " without exact fixed point, max iterations " + std::to_string(worst)};
}

// Shared by criteria 6 and 7: 100 datasets x 6 kernels, one run from a data
// point per dataset.
struct AuditSweep {
  std::size_t runs = 0, steps = 0;
  std::size_t ascent = 0, sufficient = 0, identity = 0, capped = 0;
  double worst_identity = 0.0;
};

const AuditSweep& audit_sweep() {
  static const AuditSweep sweep = [] {
    AuditSweep s;
    std::mt19937_64 rng(77);
    const char* kernels[] = {"gaussian", "biweight", "triweight", "epanechnikov", "cauchy", "logistic"};
    for (int ds = 0; ds < 100; ++ds) {
      const int d = 1 + ds % 3;
      const int n = 5 + ds % 26;
      const Eigen::MatrixXd pts = oracle::random_points(rng, n, d, 2.0);
      for (const char* name : kernels) {
        const DensityModel model(DataSet(pts), kernel_by_name(name), 0.8 + 0.2 * (ds % 5));
        MSConfig cfg;
        cfg.max_iterations = 20000;
        const auto traj = ms_run(model, pts.row(ds % n).transpose(), cfg);
        const auto rep = audit_trajectory(model, traj, 1e-10);
        ++s.runs;
        s.steps += rep.steps;
        s.ascent += rep.ascent.violations;
        s.sufficient += rep.sufficient_increase.violations;
        s.identity += rep.gradient_identity.violations;
        s.worst_identity = std::max(s.worst_identity, rep.worst_identity_rel_error);
        if (!converged(traj.stop_reason)) ++s.capped;
      }
    }
    return s;
  }();
  return sweep;
}

Outcome ascent_audit() {
  const auto& s = audit_sweep();
  return {s.ascent == 0 && s.sufficient == 0 && s.capped == 0,
          std::to_string(s.runs) + " runs / " + std::to_string(s.steps) + " steps, ascent violations " +
              std::to_string(s.ascent) + ", sufficient-increase violations " +
              std::to_string(s.sufficient) + ", runs at cap " + std::to_string(s.capped)};
}

Outcome gradient_identity() {
  const auto& s = audit_sweep();
  return {s.identity == 0, std::to_string(s.steps) + " steps, violations " + std::to_string(s.identity) +
                               ", worst relative error " + fmt("%.3g", s.worst_identity)};
}

Outcome jacobian_consistency() {
  std::mt19937_64 rng(88);
  const char* kernels[] = {"gaussian", "biweight", "triweight", "logistic", "cauchy"};
  double worst_entry = 0.0, worst_eig_excess = 0.0;
  int configs = 0, maxima = 0;
  while (configs < 100) {
    const int d = 1 + configs % 3;
    const auto& k = kernel_by_name(kernels[configs % 5]);
    const DensityModel model(DataSet(oracle::random_points(rng, 10, d, 1.0)), k, 1.2);
    const Eigen::VectorXd y = oracle::random_vector(rng, d, 0.8);
    if (!(f_check(model, y) > 0.0) || !kde_hessian(model, y).available()) continue;
    ++configs;
    worst_entry = std::max(
        worst_entry, (jacobian_at(model, y) - jacobian_via_hessian(model, y)).cwiseAbs().maxCoeff());

    const auto traj = ms_run(model, model.data().point(0));
    if (!converged(traj.stop_reason)) continue;
    const auto cls = classify_critical_point(model, traj.final_point);
    if (cls.kind == CriticalKind::not_a_max) continue;
    ++maxima;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobian_at(model, traj.final_point));
    worst_eig_excess = std::max({worst_eig_excess, -es.eigenvalues().minCoeff(),
                                 es.eigenvalues().maxCoeff() - 1.0});
  }
  return {worst_entry <= 1e-8 && worst_eig_excess <= 1e-10 && maxima > 0,
          std::to_string(configs) + " configurations, max entry diff " + fmt("%.3g", worst_entry) + "; " +
              std::to_string(maxima) + " maxima, eigenvalue excess outside [0,1] " +
              fmt("%.3g", worst_eig_excess)};
}

Outcome exponent_bounds() {
  // direct substitution: 1 - 1/max{k(3k-4)^{d-1}, 2k(3k-3)^{d-2}}
  auto direct = [](double k, double d) {
    return 1.0 - 1.0 / std::max(k * std::pow(3 * k - 4, d - 1), 2 * k * std::pow(3 * k - 3, d - 2));
  };
  const double b1 = *loja_exponent_bound(kernel_by_name("biweight"), 1);
  const double t1 = *loja_exponent_bound(kernel_by_name("triweight"), 1);
  const double b2 = *loja_exponent_bound(kernel_by_name("biweight"), 2);
  const bool ok = std::abs(b1 - 0.75) <= 1e-12 && std::abs(t1 - 5.0 / 6.0) <= 1e-12 &&
                  std::abs(b2 - 0.96875) <= 1e-12 && std::abs(b1 - direct(4, 1)) <= 1e-12 &&
                  std::abs(t1 - direct(6, 1)) <= 1e-12 && std::abs(b2 - direct(4, 2)) <= 1e-12;
  return {ok, "biweight d=1 " + fmt("%.15g", b1) + ", triweight d=1 " + fmt("%.15g", t1) +
                  ", biweight d=2 " + fmt("%.15g", b2)};
}

Outcome minorizer_and_scaling() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> cdist(0.01, 100.0);
  const char* kernels[] = {"gaussian", "epanechnikov", "biweight", "triweight", "cosine",
                           "logistic", "cauchy", "threehalves"};
  std::size_t dominance = 0, tangency = 0, scaling = 0;
  for (int draw = 0; draw < 1000; ++draw) {
    const auto& k = kernel_by_name(kernels[draw % 8]);
    const int d = 1 + draw % 3;
    const DataSet data(oracle::random_points(rng, 10, d, 1.0));
    const DensityModel model(data, k, 0.9);
    const Eigen::VectorXd x = oracle::random_vector(rng, d, 1.0);
    const Eigen::VectorXd y = oracle::random_vector(rng, d, 1.0);
    if (minorizer_value(model, x, y) > kde_value(model, x) + 1e-12) ++dominance;
    if (std::abs(minorizer_value(model, y, y) - kde_value(model, y)) > 1e-12) ++tangency;
    const DensityModel scaled(data, k.scaled(cdist(rng)), 0.9);
    const Eigen::VectorXd m1 = ms_displacement(model, y), m2 = ms_displacement(scaled, y);
    if ((m1 - m2).norm() > 1e-12 * std::max(1.0, m1.norm())) ++scaling;
  }
  return {dominance == 0 && tangency == 0 && scaling == 0,
          "1000 draws: dominance failures " + std::to_string(dominance) + ", tangency failures " +
              std::to_string(tangency) + ", scaling failures " + std::to_string(scaling)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const Criterion criteria[] = {
      {"degenerate-free pair {+-0.95}: q_hat near 0.9025, under 1 s", figure_case_one},
      {"pair {+-1}: slopes -0.5 / -2.0 within 10%, under 5 s", figure_case_two},
      {"three pairs, pinned 0.564: positions and slopes -0.25 / -1.5", figure_case_three},
      {"three pairs, seeded: positions and slopes -1/6 / -4/3", figure_case_four},
      {"Epanechnikov exact fixed point within 200 iterations", epanechnikov_finite_time},
      {"ascent and sufficient-increase audit, 100 datasets x 6 kernels", ascent_audit},
      {"gradient-step identity on audited runs", gradient_identity},
      {"Jacobian forms agree; eigenvalues at maxima in [0,1]", jacobian_consistency},
      {"exponent bound values", exponent_bounds},
      {"minorizer dominance and scaling invariance, 1000 draws", minorizer_and_scaling},
  };
  int failed = 0, index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s  [%2d] %s -- %s\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed ? 1 : 0;
}
