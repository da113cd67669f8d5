#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "modeseek/dataset.hpp"
#include "modeseek/hermite.hpp"

namespace modeseek {

/// Symmetric 1-D dataset {+-p_j} whose Gaussian KDE (h = 1) has
/// f^{(i)}(0) = 0 for i <= 2m+1 and f^{(2m+2)}(0) < 0.
struct DegenerateConfig {
  std::vector<double> positions;  // positive, strictly increasing
  int m = 1;
  double theta = 0.75;  // 1 - 1/(2m+2)
  std::vector<double> residuals;  // orders 2, 4, ..., 2m
  double next_even_residual = 0.0;  // order 2m+2, negative
  std::size_t newton_iterations = 0;

  int vanish_through() const { return 2 * m + 1; }
  int first_nonzero_order() const { return 2 * m + 2; }
};

/// sum_j He_{2r}(p_j) phi(p_j) for each requested even order 2r; proportional
/// to f^{(2r)}(0) of the Gaussian KDE over {+-p_j}.
inline std::vector<double> even_derivative_residuals(const std::vector<double>& positions,
                                                     const std::vector<int>& orders) {
  std::vector<double> out;
  out.reserve(orders.size());
  for (int order : orders) {
    if (order < 0 || order % 2 != 0)
      throw std::domain_error("residual order must be a non-negative even integer, got " +
                              std::to_string(order));
    double sum = 0.0;
    for (double p : positions) sum += hermite_he(order, p) * std_normal_pdf(p);
    out.push_back(sum);
  }
  return out;
}

class NoConvergence : public std::runtime_error {
 public:
  NoConvergence(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// Starting positions read off the published three-decimal values.
inline std::vector<double> default_degenerate_seeds(int m) {
  switch (m) {
    case 1: return {1.0};
    case 2: return {0.564, 1.721, 2.801};
    case 3: return {0.651, 1.959, 3.243};
    default: throw std::invalid_argument("m must be 1, 2 or 3");
  }
}

/// Damped Newton on the even-order residual system.
///
/// With as many positions as equations the system is square; with one more,
/// the first (smallest) position stays pinned at its seed value.
inline DegenerateConfig solve_degenerate_config(int m,
                                                std::optional<std::vector<double>> seeds = {}) {
  if (m < 1 || m > 3) throw std::invalid_argument("m must be 1, 2 or 3");
  std::vector<double> pos = seeds.value_or(default_degenerate_seeds(m));
  const auto count = static_cast<int>(pos.size());
  if (count != m && count != m + 1)
    throw std::invalid_argument("m = " + std::to_string(m) + " needs " + std::to_string(m) +
                                " or " + std::to_string(m + 1) + " positions, got " +
                                std::to_string(count));
  for (double p : pos)
    if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("positions must be positive");
  const int pinned = count - m;  // 0 or 1

  std::vector<int> orders;
  for (int r = 1; r <= m; ++r) orders.push_back(2 * r);
  auto residual_vec = [&](const std::vector<double>& p) {
    const auto r = even_derivative_residuals(p, orders);
    return Eigen::Map<const Eigen::VectorXd>(r.data(), m).eval();
  };

  constexpr int kMaxIter = 200;
  constexpr double kTarget = 1e-14;
  Eigen::VectorXd res = residual_vec(pos);
  int iter = 0;
  for (; iter < kMaxIter && res.lpNorm<Eigen::Infinity>() > kTarget; ++iter) {
    // d/dp [He_n(p) phi(p)] = -He_{n+1}(p) phi(p)
    Eigen::MatrixXd jac(m, m);
    for (int r = 0; r < m; ++r)
      for (int j = 0; j < m; ++j) {
        const double p = pos[static_cast<std::size_t>(j + pinned)];
        jac(r, j) = -hermite_he(orders[static_cast<std::size_t>(r)] + 1, p) * std_normal_pdf(p);
      }
    const Eigen::VectorXd delta = jac.colPivHouseholderQr().solve(-res);
    double damping = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving, damping *= 0.5) {
      std::vector<double> trial = pos;
      for (int j = 0; j < m; ++j) trial[static_cast<std::size_t>(j + pinned)] += damping * delta(j);
      const Eigen::VectorXd trial_res = residual_vec(trial);
      if (trial_res.norm() < res.norm()) {
        pos = std::move(trial);
        res = trial_res;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }

  std::vector<double> last(res.data(), res.data() + res.size());
  if (res.lpNorm<Eigen::Infinity>() > 1e-10)
    throw NoConvergence("degenerate configuration solver did not converge after " +
                            std::to_string(iter) + " iterations",
                        last);
  for (std::size_t j = 0; j < pos.size(); ++j)
    if (!(pos[j] > 0.0) || (j > 0 && !(pos[j] > pos[j - 1])))
      throw NoConvergence("solver left the positive increasing ordering", last);

  DegenerateConfig cfg;
  cfg.positions = pos;
  cfg.m = m;
  cfg.theta = 1.0 - 1.0 / (2.0 * m + 2.0);
  cfg.residuals = last;
  cfg.next_even_residual = even_derivative_residuals(pos, {2 * m + 2}).front();
  cfg.newton_iterations = static_cast<std::size_t>(iter);
  if (!(cfg.next_even_residual < 0.0))
    throw NoConvergence("order " + std::to_string(2 * m + 2) +
                            " derivative is not negative; the origin is not a maximum",
                        last);
  return cfg;
}

/// The points -p_k..-p_1, p_1..p_k in ascending order.
inline DataSet symmetric_dataset(const std::vector<double>& positions) {
  const auto k = static_cast<Eigen::Index>(positions.size());
  Eigen::MatrixXd pts(2 * k, 1);
  for (Eigen::Index j = 0; j < k; ++j) {
    pts(k - 1 - j, 0) = -positions[static_cast<std::size_t>(j)];
    pts(k + j, 0) = positions[static_cast<std::size_t>(j)];
  }
  return DataSet(std::move(pts));
}

}  // namespace modeseek
