#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "modeseek/density.hpp"
#include "modeseek/meanshift.hpp"

namespace modeseek {

/// A quantity that does not exist at the requested point.
class Unavailable : public std::domain_error {
 public:
  Unavailable(const std::string& what, std::optional<Eigen::Index> index = std::nullopt)
      : std::domain_error(what), index_(index) {}
  std::optional<Eigen::Index> index() const { return index_; }

 private:
  std::optional<Eigen::Index> index_;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Jacobian of the MS map y -> y + m(y)

/// J(y) = sum K''(u_i) (x_i - y)(x_i - y)^T / (h^2 sum Kcheck(u_i)),
/// with per-point bandwidths and weights folded into each summand.
inline Eigen::MatrixXd jacobian_at(const DensityModel& model,
                                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  detail::check_point(model, y);
  const auto d = model.dim();
  Eigen::MatrixXd num = Eigen::MatrixXd::Zero(d, d);
  double den = 0.0;
  for (Eigen::Index i = 0; i < model.size(); ++i) {
    const double ui = model.u(i, y);
    const auto second = second_profile_derivative_value(model.kernel(), ui);
    if (!second)
      throw Unavailable("Jacobian unavailable: data index " + std::to_string(i) +
                            " sits on a kernel knot",
                        i);
    const double hi2 = model.point_bandwidth(i) * model.point_bandwidth(i);
    const Eigen::VectorXd v = model.data().point(i) - y;
    num.noalias() += (model.value_coef(i) * *second / (hi2 * hi2)) * (v * v.transpose());
    den += model.value_coef(i) / hi2 * subgradient_profile_value(model.kernel(), ui);
  }
  if (den == 0.0) throw Unavailable("Jacobian undefined: f_check vanishes");
  return num / den;
}

/// J(y) = I + grad^2 f(y) / c(y), c = f_check / h^2.
inline Eigen::MatrixXd jacobian_via_hessian(const DensityModel& model,
                                            const Eigen::Ref<const Eigen::VectorXd>& y) {
  const auto hess = kde_hessian(model, y);
  if (!hess.available())
    throw Unavailable("Hessian not defined here (data index " +
                          std::to_string(*hess.unavailable_at) + ")",
                      hess.unavailable_at);
  const double c = curvature(model, y);
  if (c == 0.0) throw Unavailable("Jacobian undefined: f_check vanishes");
  return Eigen::MatrixXd::Identity(model.dim(), model.dim()) + hess.matrix / c;
}

inline double largest_symmetric_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

// ---------------------------------------------------------------------------
// Linear rate at a non-degenerate maximum

enum class CriticalKind { nondegenerate_max, degenerate, not_a_max };

inline std::string_view to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::nondegenerate_max: return "nondegenerate_max";
    case CriticalKind::degenerate: return "degenerate";
    case CriticalKind::not_a_max: return "not_a_max";
  }
  return "?";
}

struct LinearRate {
  CriticalKind kind = CriticalKind::degenerate;
  double largest_eigenvalue = 0.0;
  double curvature = 0.0;
  std::optional<double> q;  // only for nondegenerate_max
};

/// |lambda| <= kDegenerateRelTol * c(y) counts as a zero Hessian eigenvalue.
inline constexpr double kDegenerateRelTol = 1e-9;

inline LinearRate classify_critical_point(const DensityModel& model,
                                          const Eigen::Ref<const Eigen::VectorXd>& y_bar) {
  const auto hess = kde_hessian(model, y_bar);
  if (!hess.available())
    throw Unavailable("Hessian not defined here (data index " +
                          std::to_string(*hess.unavailable_at) + ")",
                      hess.unavailable_at);
  LinearRate out;
  out.curvature = curvature(model, y_bar);
  if (out.curvature == 0.0) throw Unavailable("f_check vanishes at the critical point");
  out.largest_eigenvalue = largest_symmetric_eigenvalue(hess.matrix);
  if (std::abs(out.largest_eigenvalue) <= kDegenerateRelTol * out.curvature) {
    out.kind = CriticalKind::degenerate;
  } else if (out.largest_eigenvalue > 0.0) {
    out.kind = CriticalKind::not_a_max;
  } else {
    out.kind = CriticalKind::nondegenerate_max;
    out.q = 1.0 + out.largest_eigenvalue / out.curvature;
  }
  return out;
}

/// q = 1 + h^2 lambda / f_check(y_bar) at a critical point.
inline LinearRate linear_rate(const DensityModel& model,
                              const Eigen::Ref<const Eigen::VectorXd>& y_bar) {
  const double g = kde_gradient(model, y_bar).norm();
  if (g > 1e-8)
    throw std::domain_error("linear_rate: gradient norm " + std::to_string(g) +
                            " exceeds 1e-8, not a critical point");
  return classify_critical_point(model, y_bar);
}

// ---------------------------------------------------------------------------
// Lojasiewicz exponent bounds and rate classes

/// 1 - 1 / max{k (3k-4)^{d-1}, 2k (3k-3)^{d-2}} for a C^1 piecewise
/// polynomial kernel of degree k >= 2.
inline double loja_exponent_bound(int k, int d) {
  if (k < 2) throw std::invalid_argument("degree must be >= 2");
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  const double a = k * std::pow(3.0 * k - 4.0, d - 1);
  const double b = 2.0 * k * std::pow(3.0 * k - 3.0, d - 2);
  return 1.0 - 1.0 / std::max(a, b);
}

inline std::optional<double> loja_exponent_bound(const KernelSpec& kernel, int d) {
  const auto k = max_poly_degree(kernel);
  if (!k || *k < 2 || !kernel.is_c1) return std::nullopt;
  return loja_exponent_bound(*k, d);
}

/// 1 - 1/((k-1)^d + 1). Only valid at local maxima under extra conditions;
/// never applied automatically.
inline std::optional<double> loja_exponent_alternative_bound(const KernelSpec& kernel, int d) {
  const auto k = max_poly_degree(kernel);
  if (!k || *k < 2 || !kernel.is_c1) return std::nullopt;
  return 1.0 - 1.0 / (std::pow(*k - 1.0, d) + 1.0);
}

enum class RateClass { finite, linear, polynomial };

inline std::string_view to_string(RateClass c) {
  switch (c) {
    case RateClass::finite: return "finite";
    case RateClass::linear: return "linear";
    case RateClass::polynomial: return "polynomial";
  }
  return "?";
}

struct RateClassification {
  RateClass rate_class = RateClass::linear;
  /// |y_bar - y_t| = O(t^{-position_slope})
  std::optional<double> position_slope;
  /// f(y_bar) - f(y_t) = O(t^{-value_slope})
  std::optional<double> value_slope;
};

inline RateClassification classify_rate(double theta) {
  if (!(theta >= 0.0 && theta < 1.0))
    throw std::domain_error("Lojasiewicz exponent must lie in [0, 1)");
  constexpr double half_tol = 1e-12;
  if (std::abs(theta - 0.5) <= half_tol) return {RateClass::linear, std::nullopt, std::nullopt};
  if (theta < 0.5) return {RateClass::finite, std::nullopt, std::nullopt};
  const double denom = 2.0 * theta - 1.0;
  return {RateClass::polynomial, (1.0 - theta) / denom, 1.0 / denom};
}

// ---------------------------------------------------------------------------
// Empirical rates

struct EmpiricalFit {
  bool finite_convergence = false;
  std::size_t usable_states = 0;
  std::size_t window_first_t = 0;
  std::size_t window_last_t = 0;
  std::optional<double> position_slope;  // d log|y_bar - y_t| / d log t
  std::optional<double> value_slope;     // d log(f(y_bar) - f(y_t)) / d log t
  std::optional<double> q_hat;           // median successive distance ratio
};

inline constexpr double kDistanceFloor = 1e-12;
inline constexpr std::size_t kMinFitStates = 20;

namespace detail {

inline std::optional<double> ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

inline double median(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lower);
  }
  return m;
}

}  // namespace detail

/// Log-log slopes of |y_bar - y_t| and f(y_bar) - f(y_t) over the last half
/// of states above the 1e-12 distance floor, plus the median ratio q_hat.
inline EmpiricalFit fit_empirical_rates(const Trajectory& traj,
                                        const Eigen::Ref<const Eigen::VectorXd>& y_bar,
                                        double f_bar) {
  std::vector<std::size_t> usable;
  std::vector<double> dist(traj.states.size());
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    dist[k] = (traj.states[k].y - y_bar).norm();
    if (dist[k] > kDistanceFloor) usable.push_back(k);
  }
  EmpiricalFit fit;
  fit.usable_states = usable.size();
  if (usable.size() < kMinFitStates) {
    const bool reached = traj.stop_reason == StopReason::exact_fixed_point ||
                         (traj.final_point.size() == y_bar.size() &&
                          (traj.final_point - y_bar).norm() == 0.0);
    if (reached) {
      fit.finite_convergence = true;
      return fit;
    }
    throw InsufficientData("need at least " + std::to_string(kMinFitStates) +
                           " states away from the limit, have " + std::to_string(usable.size()));
  }

  const std::size_t first = usable.size() / 2;
  fit.window_first_t = traj.states[usable[first]].t;
  fit.window_last_t = traj.states[usable.back()].t;

  std::vector<double> lt, ld, ltv, lv, ratios;
  for (std::size_t j = first; j < usable.size(); ++j) {
    const auto k = usable[j];
    const double logt = std::log(static_cast<double>(traj.states[k].t));
    lt.push_back(logt);
    ld.push_back(std::log(dist[k]));
    const double gap = f_bar - traj.states[k].value;
    if (gap > 0.0) {
      ltv.push_back(logt);
      lv.push_back(std::log(gap));
    }
    if (j + 1 < usable.size() && usable[j + 1] == k + 1) ratios.push_back(dist[k + 1] / dist[k]);
  }
  fit.position_slope = detail::ls_slope(lt, ld);
  fit.value_slope = detail::ls_slope(ltv, lv);
  if (!ratios.empty()) fit.q_hat = detail::median(std::move(ratios));
  return fit;
}

// ---------------------------------------------------------------------------
// Per-step audit

struct CheckSummary {
  std::size_t violations = 0;
  /// Smallest (lhs - rhs) seen; negative means the inequality was violated.
  double worst_margin = std::numeric_limits<double>::infinity();
  std::size_t worst_t = 0;

  void record(double margin, double tol, std::size_t t) {
    if (margin < -tol) ++violations;
    if (margin < worst_margin) {
      worst_margin = margin;
      worst_t = t;
    }
  }
};

struct AuditReport {
  std::size_t steps = 0;
  double over_relaxation = 1.0;
  double tolerance = 1e-10;
  CheckSummary ascent;               // f(y_{t+1}) >= f(y_t)
  CheckSummary sufficient_increase;  // gain >= (c/2)(2-zeta)/zeta |Delta|^2
  CheckSummary gradient_identity;    // |Delta| c = zeta |grad f|, margin = -excess
  double worst_identity_rel_error = 0.0;
  double min_f_check = std::numeric_limits<double>::infinity();

  bool passed() const {
    return ascent.violations == 0 && sufficient_increase.violations == 0 &&
           gradient_identity.violations == 0;
  }
};

/// Recomputes every recorded step against the model and checks ascent, the
/// sufficient-increase inequality, and |Delta| = zeta |grad f| / c.
inline AuditReport audit_trajectory(const DensityModel& model, const Trajectory& traj,
                                    double tolerance = 1e-10) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  AuditReport report;
  report.over_relaxation = traj.over_relaxation;
  report.tolerance = tolerance;
  const double zeta = traj.over_relaxation;
  double data_scale = 0.0;
  for (Eigen::Index i = 0; i < model.size(); ++i)
    data_scale = std::max(data_scale, model.data().point(i).norm());

  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const auto& st = traj.states[k];
    const Eigen::VectorXd& next = k + 1 < traj.states.size() ? traj.states[k + 1].y : traj.final_point;
    if (next.size() != st.y.size()) continue;
    const DensityState s = evaluate_state(model, st.y);
    report.min_f_check = std::min(report.min_f_check, s.f_check);
    const double f_next = kde_value(model, next);
    const double step = (next - st.y).norm();
    const double gain = f_next - s.value;
    ++report.steps;

    report.ascent.record(gain, tolerance, st.t);
    report.sufficient_increase.record(
        gain - 0.5 * s.curvature * (2.0 - zeta) / zeta * step * step, tolerance, st.t);

    const double lhs = step * s.curvature;
    const double rhs = zeta * s.gradient.norm();
    const double floor = 64.0 * eps * (st.y.norm() + data_scale) * s.curvature;
    const double allowed = tolerance * std::max(lhs, rhs) + floor;
    const double excess = std::abs(lhs - rhs) - allowed;
    report.gradient_identity.record(-excess, 0.0, st.t);
    if (std::max(lhs, rhs) > 0.0)
      report.worst_identity_rel_error =
          std::max(report.worst_identity_rel_error,
                   std::max(0.0, std::abs(lhs - rhs) - floor) / std::max(lhs, rhs));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Rate report

struct RateReportOptions {
  /// Forced limit point; defaults to the trajectory's final point.
  std::optional<Eigen::VectorXd> limit_point;
  /// Known Lojasiewicz exponent, e.g. from a constructed degenerate dataset.
  std::optional<double> theta;
};

struct RateReport {
  Eigen::VectorXd limit_point;
  double limit_value = 0.0;
  StopReason stop_reason = StopReason::max_iterations;
  std::optional<double> largest_hessian_eigenvalue;
  std::optional<Eigen::Index> hessian_unavailable_at;
  std::optional<CriticalKind> critical_kind;
  std::optional<double> predicted_q;
  std::optional<double> loja_exponent;
  std::optional<double> loja_exponent_upper_bound;
  std::optional<RateClass> rate_class;
  std::optional<double> predicted_position_slope;
  std::optional<double> predicted_value_slope;
  EmpiricalFit fit;
  std::optional<std::string> fit_error;
};

inline RateReport make_rate_report(const DensityModel& model, const Trajectory& traj,
                                   const RateReportOptions& options = {}) {
  RateReport rep;
  rep.limit_point = options.limit_point.value_or(traj.final_point);
  rep.limit_value = kde_value(model, rep.limit_point);
  rep.stop_reason = traj.stop_reason;
  rep.loja_exponent_upper_bound =
      loja_exponent_bound(model.kernel(), static_cast<int>(model.dim()));

  if (curvature(model, rep.limit_point) > 0.0) {
    try {
      const auto lr = classify_critical_point(model, rep.limit_point);
      rep.largest_hessian_eigenvalue = lr.largest_eigenvalue;
      rep.critical_kind = lr.kind;
      rep.predicted_q = lr.q;
      if (lr.kind == CriticalKind::nondegenerate_max &&
          traj.stop_reason != StopReason::exact_fixed_point)
        rep.loja_exponent = 0.5;
    } catch (const Unavailable& e) {
      rep.hessian_unavailable_at = e.index();
    }
  }
  if (traj.stop_reason == StopReason::exact_fixed_point) rep.rate_class = RateClass::finite;
  if (options.theta) rep.loja_exponent = options.theta;
  if (rep.loja_exponent) {
    const auto cls = classify_rate(*rep.loja_exponent);
    rep.rate_class = cls.rate_class;
    rep.predicted_position_slope = cls.position_slope;
    rep.predicted_value_slope = cls.value_slope;
  }

  try {
    rep.fit = fit_empirical_rates(traj, rep.limit_point, rep.limit_value);
    if (rep.fit.finite_convergence && !rep.rate_class) rep.rate_class = RateClass::finite;
  } catch (const InsufficientData& e) {
    rep.fit_error = e.what();
  }
  return rep;
}

}  // namespace modeseek
