#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "modeseek/density.hpp"

namespace modeseek {

struct MSConfig {
  double step_tolerance = 1e-12;
  std::size_t max_iterations = 100000;
  /// y_{t+1} = y_t + zeta * m(y_t); zeta = 1 is plain mean shift.
  double over_relaxation = 1.0;
  bool record_trajectory = true;

  void validate() const {
    if (!(step_tolerance > 0.0)) throw std::invalid_argument("step_tolerance must be > 0");
    if (max_iterations == 0) throw std::invalid_argument("max_iterations must be > 0");
    if (!(over_relaxation > 0.0 && over_relaxation < 2.0))
      throw std::invalid_argument("over_relaxation must lie in (0, 2)");
  }
};

enum class StopReason { step_below_tolerance, exact_fixed_point, f_check_zero, max_iterations };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::step_below_tolerance: return "step_below_tolerance";
    case StopReason::exact_fixed_point: return "exact_fixed_point";
    case StopReason::f_check_zero: return "f_check_zero";
    case StopReason::max_iterations: return "max_iterations";
  }
  return "?";
}

inline bool converged(StopReason r) { return r != StopReason::max_iterations; }

struct TrajectoryState {
  std::size_t t = 0;  // 1-based
  Eigen::VectorXd y;
  double value = 0.0;
  double step_norm = 0.0;  // |y_{t+1} - y_t|
  double grad_norm = 0.0;
  double f_check = 0.0;
};

/// A recorded MS run.
///
/// states[k].step_norm is the distance to states[k+1].y; for the last state it
/// is the distance to final_point.
struct Trajectory {
  std::vector<TrajectoryState> states;
  StopReason stop_reason = StopReason::max_iterations;
  Eigen::VectorXd start;
  Eigen::VectorXd final_point;
  double final_value = 0.0;
  std::size_t iterations = 0;  // number of update-rule applications
  double over_relaxation = 1.0;
  /// f(start) = 0: the positivity guarantee for f_check does not apply.
  bool start_density_zero = false;
};

class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, std::size_t iteration,
                   std::optional<Eigen::Index> seed = std::nullopt)
      : std::runtime_error(what), iteration_(iteration), seed_(seed) {}
  std::size_t iteration() const { return iteration_; }
  std::optional<Eigen::Index> seed() const { return seed_; }

 private:
  std::size_t iteration_;
  std::optional<Eigen::Index> seed_;
};

/// Kcheck-weighted mean of the data at y, or nullopt when f_check(y) = 0.
inline std::optional<Eigen::VectorXd> weighted_mean(const DensityModel& model,
                                                    const Eigen::Ref<const Eigen::VectorXd>& y) {
  detail::check_point(model, y);
  Eigen::VectorXd num = Eigen::VectorXd::Zero(model.dim());
  double den = 0.0;
  for (Eigen::Index i = 0; i < model.size(); ++i) {
    const double hi = model.point_bandwidth(i);
    const double a = model.value_coef(i) / (hi * hi) *
                     subgradient_profile_value(model.kernel(), model.u(i, y));
    num += a * model.data().point(i);
    den += a;
  }
  if (den == 0.0) return std::nullopt;
  return Eigen::VectorXd(num / den);
}

/// Mean shift vector m(y); zero where f_check vanishes.
inline Eigen::VectorXd ms_displacement(const DensityModel& model,
                                       const Eigen::Ref<const Eigen::VectorXd>& y) {
  auto mean = weighted_mean(model, y);
  if (!mean) return Eigen::VectorXd::Zero(model.dim());
  return *mean - y;
}

/// One MS update.
inline Eigen::VectorXd ms_step(const DensityModel& model,
                               const Eigen::Ref<const Eigen::VectorXd>& y,
                               double over_relaxation = 1.0) {
  auto mean = weighted_mean(model, y);
  if (!mean) return y;
  if (over_relaxation == 1.0) return *mean;
  return y + over_relaxation * (*mean - y);
}

inline Trajectory ms_run(const DensityModel& model, const Eigen::Ref<const Eigen::VectorXd>& start,
                         const MSConfig& config = {}) {
  config.validate();
  detail::check_point(model, start);
  Trajectory traj;
  traj.start = start;
  traj.over_relaxation = config.over_relaxation;

  Eigen::VectorXd y = start;
  for (std::size_t t = 1;; ++t) {
    const DensityState s = evaluate_state(model, y);
    if (t == 1) traj.start_density_zero = !(s.value > 0.0);
    if (!std::isfinite(s.value) || !s.gradient.allFinite() || !std::isfinite(s.f_check))
      throw NumericalFailure("non-finite density state at iteration " + std::to_string(t), t);

    TrajectoryState state{t, y, s.value, 0.0, s.gradient.norm(), s.f_check};
    if (s.f_check == 0.0) {
      if (config.record_trajectory) traj.states.push_back(std::move(state));
      traj.stop_reason = StopReason::f_check_zero;
      traj.final_point = y;
      traj.final_value = s.value;
      traj.iterations = t - 1;
      return traj;
    }

    Eigen::VectorXd next = ms_step(model, y, config.over_relaxation);
    if (!next.allFinite())
      throw NumericalFailure("non-finite iterate at iteration " + std::to_string(t), t);
    state.step_norm = (next - y).norm();
    const double step = state.step_norm;
    if (config.record_trajectory) traj.states.push_back(std::move(state));
    traj.iterations = t;

    std::optional<StopReason> stop;
    if (step == 0.0)
      stop = StopReason::exact_fixed_point;
    else if (step <= config.step_tolerance)
      stop = StopReason::step_below_tolerance;
    else if (t >= config.max_iterations)
      stop = StopReason::max_iterations;
    y = std::move(next);
    if (stop) {
      traj.stop_reason = *stop;
      traj.final_point = y;
      traj.final_value = kde_value(model, y);
      return traj;
    }
  }
}

struct ClusterResult {
  std::vector<int> labels;             // per data point, indexes modes
  std::vector<Eigen::VectorXd> modes;  // representative per merged mode
  std::vector<StopReason> stop_reasons;
  std::vector<Eigen::VectorXd> endpoints;  // per seed
};

/// 1e-6 of the data diameter.
inline double default_merge_tolerance(const DataSet& data) { return 1e-6 * data.diameter(); }

inline unsigned default_thread_count() {
  if (const char* env = std::getenv("MODESEEK_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs MS from every data point and merges endpoints by single linkage.
inline ClusterResult cluster(const DensityModel& model, MSConfig config,
                             std::optional<double> merge_tolerance = std::nullopt,
                             unsigned threads = 1) {
  const auto n = model.size();
  const double tol = merge_tolerance.value_or(default_merge_tolerance(model.data()));
  if (!(tol >= 0.0)) throw std::invalid_argument("merge tolerance must be >= 0");
  config.record_trajectory = false;

  ClusterResult out;
  out.endpoints.resize(n);
  out.stop_reasons.resize(n);
  std::vector<std::exception_ptr> errors(n);
  auto run_seed = [&](Eigen::Index i) {
    try {
      auto traj = ms_run(model, model.data().point(i), config);
      out.endpoints[i] = std::move(traj.final_point);
      out.stop_reasons[i] = traj.stop_reason;
    } catch (const NumericalFailure& e) {
      errors[i] = std::make_exception_ptr(NumericalFailure(
          std::string(e.what()) + " (seed " + std::to_string(i) + ")", e.iteration(), i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (Eigen::Index i = 0; i < n; ++i) run_seed(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (Eigen::Index i = w; i < n; i += threads) run_seed(i);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // single linkage via union-find, roots are the smallest seed index
  std::vector<Eigen::Index> parent(n);
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&](Eigen::Index a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if ((out.endpoints[i] - out.endpoints[j]).norm() <= tol) {
        const auto a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }

  out.labels.assign(n, -1);
  std::vector<int> label_of_root(n, -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = find(i);
    if (label_of_root[r] < 0) {
      label_of_root[r] = static_cast<int>(out.modes.size());
      out.modes.push_back(out.endpoints[r]);
    }
    out.labels[i] = label_of_root[r];
  }
  return out;
}

}  // namespace modeseek
