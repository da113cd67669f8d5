#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "modeseek/dataset.hpp"
#include "modeseek/hermite.hpp"
#include "modeseek/kernels.hpp"

namespace modeseek {

/// Kernel density estimate f(x) = (1/n) sum_i w_i h_i^{-d} K((x - x_i) / h_i).
///
/// With no per-point bandwidths every h_i is the shared `bandwidth`. When
/// `normalized` is set all reported quantities carry the kernel's
/// normalization constant; the fixed-point structure does not depend on it.
class DensityModel {
 public:
  DensityModel(DataSet data, KernelSpec kernel, double bandwidth, bool normalized = false)
      : data_(std::move(data)), kernel_(std::move(kernel)), bandwidth_(bandwidth),
        normalized_(normalized) {
    if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_))
      throw std::invalid_argument("bandwidth must be positive and finite");
    const auto n = data_.size();
    const auto d = static_cast<int>(data_.dim());
    norm_ = normalized_ ? normalization_constant(kernel_, d) : 1.0;
    h_.resize(n);
    value_coef_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      h_[i] = data_.bandwidth(i, bandwidth_);
      value_coef_[i] = norm_ * data_.weight(i) / (static_cast<double>(n) * std::pow(h_[i], d));
    }
  }

  const DataSet& data() const { return data_; }
  const KernelSpec& kernel() const { return kernel_; }
  double bandwidth() const { return bandwidth_; }
  bool normalized() const { return normalized_; }
  double normalization() const { return norm_; }
  Eigen::Index size() const { return data_.size(); }
  Eigen::Index dim() const { return data_.dim(); }

  double point_bandwidth(Eigen::Index i) const { return h_[i]; }
  /// Multiplier of K in the i-th summand.
  double value_coef(Eigen::Index i) const { return value_coef_[i]; }

  /// u_i(y) = |y - x_i|^2 / (2 h_i^2).
  double u(Eigen::Index i, const Eigen::Ref<const Eigen::VectorXd>& y) const {
    return (y - data_.point(i)).squaredNorm() / (2.0 * h_[i] * h_[i]);
  }

 private:
  DataSet data_;
  KernelSpec kernel_;
  double bandwidth_;
  bool normalized_;
  double norm_ = 1.0;
  std::vector<double> h_;
  std::vector<double> value_coef_;
};

namespace detail {
inline void check_point(const DensityModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.dim())
    throw std::invalid_argument("point dimension " + std::to_string(x.size()) +
                                " does not match data dimension " + std::to_string(model.dim()));
  if (!x.allFinite()) throw std::domain_error("non-finite evaluation point");
}
}  // namespace detail

/// Everything one MS iteration needs at y, from a single pass over the data.
struct DensityState {
  double value = 0.0;
  Eigen::VectorXd gradient;
  double f_check = 0.0;
  /// (1/n) sum w_i h_i^{-d-2} Kcheck(u_i); equals f_check / h^2 for a shared bandwidth.
  double curvature = 0.0;
};

inline DensityState evaluate_state(const DensityModel& model,
                                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  detail::check_point(model, y);
  DensityState s;
  s.gradient = Eigen::VectorXd::Zero(model.dim());
  const auto& kernel = model.kernel();
  for (Eigen::Index i = 0; i < model.size(); ++i) {
    const double hi = model.point_bandwidth(i);
    const double ui = model.u(i, y);
    const double c = model.value_coef(i);
    const double sub = subgradient_profile_value(kernel, ui);
    s.value += c * profile_value(kernel, ui);
    s.f_check += c * sub;
    const double a = c * sub / (hi * hi);
    s.curvature += a;
    s.gradient += a * (model.data().point(i) - y);
  }
  return s;
}

inline double kde_value(const DensityModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  detail::check_point(model, x);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < model.size(); ++i)
    sum += model.value_coef(i) * profile_value(model.kernel(), model.u(i, x));
  return sum;
}

/// grad f(x) = (1/n) sum w_i h_i^{-d-2} Kcheck(u_i) (x_i - x).
inline Eigen::VectorXd kde_gradient(const DensityModel& model,
                                    const Eigen::Ref<const Eigen::VectorXd>& x) {
  return evaluate_state(model, x).gradient;
}

struct GradientResult {
  Eigen::VectorXd value;
  /// Set when x sits on a knot of a non-C^1 kernel: `value` then uses the
  /// right-derivative selection and f is not differentiable there.
  std::optional<Eigen::Index> one_sided_at;
};

inline GradientResult kde_gradient_checked(const DensityModel& model,
                                           const Eigen::Ref<const Eigen::VectorXd>& x) {
  GradientResult out{kde_gradient(model, x), std::nullopt};
  if (!model.kernel().is_c1) {
    for (Eigen::Index i = 0; i < model.size(); ++i) {
      if (knot_near(model.kernel(), model.u(i, x))) {
        out.one_sided_at = i;
        break;
      }
    }
  }
  return out;
}

/// f_check(x) = (1/n) sum w_i h_i^{-d} Kcheck(u_i).
inline double f_check(const DensityModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  detail::check_point(model, x);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < model.size(); ++i)
    sum += model.value_coef(i) * subgradient_profile_value(model.kernel(), model.u(i, x));
  return sum;
}

/// Curvature of the quadratic minorizer; f_check / h^2 for a shared bandwidth.
inline double curvature(const DensityModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return evaluate_state(model, x).curvature;
}

struct HessianResult {
  Eigen::MatrixXd matrix;
  /// Data index whose offset hits a knot (or the kernel has no K'').
  std::optional<Eigen::Index> unavailable_at;

  bool available() const { return !unavailable_at.has_value(); }
  const Eigen::MatrixXd& value() const {
    if (!available())
      throw std::domain_error("Hessian not defined here (data index " +
                              std::to_string(*unavailable_at) + ")");
    return matrix;
  }
};

inline HessianResult kde_hessian(const DensityModel& model,
                                 const Eigen::Ref<const Eigen::VectorXd>& x) {
  detail::check_point(model, x);
  const auto d = model.dim();
  HessianResult out{Eigen::MatrixXd::Zero(d, d), std::nullopt};
  for (Eigen::Index i = 0; i < model.size(); ++i) {
    const double ui = model.u(i, x);
    const auto second = second_profile_derivative_value(model.kernel(), ui);
    if (!second) {
      out.unavailable_at = i;
      out.matrix.resize(0, 0);
      return out;
    }
    const double hi2 = model.point_bandwidth(i) * model.point_bandwidth(i);
    const double c = model.value_coef(i) / hi2;
    const Eigen::VectorXd v = x - model.data().point(i);
    out.matrix.noalias() += (c * *second / hi2) * (v * v.transpose());
    out.matrix.diagonal().array() -= c * subgradient_profile_value(model.kernel(), ui);
  }
  return out;
}

/// Quadratic minorizer of f anchored at y, evaluated at x.
inline double minorizer_value(const DensityModel& model,
                              const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& anchor) {
  detail::check_point(model, x);
  detail::check_point(model, anchor);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < model.size(); ++i) {
    const double uy = model.u(i, anchor);
    const double ux = model.u(i, x);
    sum += model.value_coef(i) * (profile_value(model.kernel(), uy) -
                                  subgradient_profile_value(model.kernel(), uy) * (ux - uy));
  }
  return sum;
}

enum class DerivativeMethod { automatic, hermite, finite_difference };

namespace detail {

inline double hessian_1d(const DensityModel& model, double x) {
  Eigen::VectorXd p(1);
  p(0) = x;
  return kde_hessian(model, p).value()(0, 0);
}

inline double derivative_1d_hermite(const DensityModel& model, int m, double x) {
  double sum = 0.0;
  const double sign = (m % 2 == 0) ? 1.0 : -1.0;
  const double scale = model.kernel().scale;
  for (Eigen::Index i = 0; i < model.size(); ++i) {
    const double hi = model.point_bandwidth(i);
    const double z = (x - model.data().points()(i, 0)) / hi;
    sum += model.value_coef(i) * scale * sign * hermite_he(m, z) * std::exp(-0.5 * z * z) /
           std::pow(hi, m);
  }
  return sum;
}

inline double derivative_1d_fd(const DensityModel& model, int m, double x) {
  Eigen::VectorXd p(1);
  p(0) = x;
  switch (m) {
    case 0: return kde_value(model, p);
    case 1: return kde_gradient(model, p)(0);
    case 2: return hessian_1d(model, x);
    case 3:
    case 4: break;
    default:
      throw std::domain_error("finite-difference derivative supports orders 0..4, got " +
                              std::to_string(m));
  }
  const double step = std::max(1e-3, 1e-3 * std::abs(x));
  const double center = hessian_1d(model, x);
  auto stencil = [&](double s) {
    const double hp = hessian_1d(model, x + s);
    const double hm = hessian_1d(model, x - s);
    return m == 3 ? (hp - hm) / (2.0 * s) : (hp - 2.0 * center + hm) / (s * s);
  };
  return (4.0 * stencil(step / 2.0) - stencil(step)) / 3.0;
}

}  // namespace detail

/// m-th derivative of a one-dimensional KDE at x.
///
/// Gaussian kernels use d^m/dz^m e^{-z^2/2} = (-1)^m He_m(z) e^{-z^2/2}; other
/// kernels difference the analytic second derivative (orders up to 4).
inline double kde_derivative_1d(const DensityModel& model, int m, double x,
                                DerivativeMethod method = DerivativeMethod::automatic) {
  if (model.dim() != 1) throw std::invalid_argument("kde_derivative_1d requires d = 1");
  if (m < 0) throw std::invalid_argument("derivative order must be >= 0");
  if (!std::isfinite(x)) throw std::domain_error("non-finite evaluation point");
  const bool gaussian = model.kernel().name == "gaussian";
  if (method == DerivativeMethod::automatic)
    method = gaussian ? DerivativeMethod::hermite : DerivativeMethod::finite_difference;
  if (method == DerivativeMethod::hermite) {
    if (!gaussian) throw std::invalid_argument("Hermite derivative path needs the gaussian kernel");
    return detail::derivative_1d_hermite(model, m, x);
  }
  return detail::derivative_1d_fd(model, m, x);
}

}  // namespace modeseek
