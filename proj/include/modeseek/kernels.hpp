#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace modeseek {

/// What the convergence theory guarantees for MS with a given kernel.
enum class Guarantee {
  guaranteed,   // unconditional
  conditional,  // needs extra assumptions on the trajectory
  not_ensured,  // not even f(y_t) convergence is ensured
};

inline std::string_view to_string(Guarantee g) {
  switch (g) {
    case Guarantee::guaranteed: return "guaranteed";
    case Guarantee::conditional: return "conditional";
    case Guarantee::not_ensured: return "not_ensured";
  }
  return "?";
}

/// A radially symmetric kernel K(x) = scale * profile(|x|^2 / 2).
///
/// The profile is stored unnormalized. `subgradient_profile` is the selection
/// from -dK/du used by mean shift, with the right-derivative convention at
/// knots, so it vanishes at the support edge of compact kernels.
struct KernelSpec {
  std::string name;
  double (*profile)(double) = nullptr;
  double (*subgradient_profile)(double) = nullptr;
  double (*second_profile_derivative)(double) = nullptr;  // may be null
  std::vector<double> knots;                               // u-values
  bool satisfies_asm2 = false;  // convex, non-increasing, finite K'(0+)
  bool satisfies_asm3 = false;  // Lipschitz gradient
  bool satisfies_asm4 = false;  // analytic or subanalytic
  bool is_c1 = false;
  std::optional<int> max_poly_degree;             // degree in x
  std::optional<double> support_radius_sq_half;   // profile is 0 beyond
  Guarantee convergence = Guarantee::not_ensured;
  Guarantee rate = Guarantee::not_ensured;
  std::string_view note;
  double scale = 1.0;

  /// Same kernel multiplied by a positive constant.
  KernelSpec scaled(double c) const {
    if (!(c > 0.0) || !std::isfinite(c))
      throw std::invalid_argument("kernel scale must be positive and finite");
    KernelSpec out = *this;
    out.scale *= c;
    return out;
  }
};

/// u-distance below which a point counts as sitting on a knot.
inline constexpr double kKnotTolerance = 1e-9;

namespace profiles {

inline double plus(double v) { return v > 0.0 ? v : 0.0; }

inline double gaussian(double u) { return std::exp(-u); }
inline double gaussian_d2(double u) { return std::exp(-u); }

inline double epanechnikov(double u) { return plus(1.0 - u); }
inline double epanechnikov_sub(double u) { return u < 1.0 ? 1.0 : 0.0; }
inline double epanechnikov_d2(double) { return 0.0; }

inline double biweight(double u) {
  const double t = plus(1.0 - u);
  return t * t;
}
inline double biweight_sub(double u) { return 2.0 * plus(1.0 - u); }
inline double biweight_d2(double u) { return u < 1.0 ? 2.0 : 0.0; }

inline double triweight(double u) {
  const double t = plus(1.0 - u);
  return t * t * t;
}
inline double triweight_sub(double u) {
  const double t = plus(1.0 - u);
  return 3.0 * t * t;
}
inline double triweight_d2(double u) { return 6.0 * plus(1.0 - u); }

inline double threehalves(double u) {
  const double t = plus(1.0 - u);
  return t * std::sqrt(t);
}
inline double threehalves_sub(double u) { return 1.5 * std::sqrt(plus(1.0 - u)); }
inline double threehalves_d2(double u) {
  return u < 1.0 ? 0.75 / std::sqrt(1.0 - u) : 0.0;
}

inline double tricube(double u) {
  if (u >= 1.0) return 0.0;
  const double t = 1.0 - u * std::sqrt(u);
  return t * t * t;
}
inline double tricube_sub(double u) {
  if (u >= 1.0) return 0.0;
  const double r = std::sqrt(u);
  const double t = 1.0 - u * r;
  return 4.5 * r * t * t;
}
inline double tricube_d2(double u) {
  if (u >= 1.0) return 0.0;
  const double r = std::sqrt(u);
  const double t = 1.0 - u * r;
  return -4.5 * (t * t / (2.0 * r) - 3.0 * u * t);
}

inline double cosine(double u) {
  if (u >= 1.0) return 0.0;
  return std::cos(std::numbers::pi * std::sqrt(u) / 2.0);
}
inline double cosine_sub(double u) {
  constexpr double pi = std::numbers::pi;
  if (u >= 1.0) return 0.0;
  const double r = std::sqrt(u);
  if (r < 1e-8) return pi * pi / 8.0;
  return pi * std::sin(pi * r / 2.0) / (4.0 * r);
}
inline double cosine_d2(double u) {
  constexpr double pi = std::numbers::pi;
  if (u >= 1.0) return 0.0;
  const double r = std::sqrt(u);
  const double a = pi * r / 2.0;
  if (r < 0.05) {
    // (sin a - a cos a) / a^3 by its Taylor series
    const double a2 = a * a;
    const double series =
        1.0 / 3.0 - a2 / 30.0 + a2 * a2 / 840.0 - a2 * a2 * a2 / 45360.0;
    return (pi / 8.0) * (pi * pi * pi / 8.0) * series;
  }
  return (pi / 8.0) * (std::sin(a) - a * std::cos(a)) / (r * r * r);
}

// 1 / (e^r + 2 + e^{-r}) with r = sqrt(u). As a function of u this is
// 1 / D(u) with D(u) = 2 + 2 cosh(sqrt(u)), analytic in u.
namespace detail {
struct LogisticSeries {
  double d0, d1, d2;  // D, D', D''
};
inline LogisticSeries logistic_series(double u) {
  // D(u) = 4 + 2 sum_{k>=1} u^k / (2k)!
  double d0 = 4.0, d1 = 0.0, d2 = 0.0;
  double fact = 1.0;  // (2k)!
  for (int k = 1; k <= 8; ++k) {
    fact *= (2.0 * k - 1.0) * (2.0 * k);
    d0 += 2.0 * std::pow(u, k) / fact;
    d1 += 2.0 * k * std::pow(u, k - 1) / fact;
    if (k >= 2) d2 += 2.0 * k * (k - 1.0) * std::pow(u, k - 2) / fact;
  }
  return {d0, d1, d2};
}
}  // namespace detail

inline double logistic(double u) {
  const double e = std::exp(-std::sqrt(u));
  return e / ((1.0 + e) * (1.0 + e));
}
inline double logistic_sub(double u) {
  const double r = std::sqrt(u);
  if (r < 0.1) {
    const auto s = detail::logistic_series(u);
    return s.d1 / (s.d0 * s.d0);
  }
  const double e = std::exp(-r);
  const double p = 1.0 + e;
  return e * (-std::expm1(-r)) / (2.0 * r * p * p * p);
}
inline double logistic_d2(double u) {
  const double r = std::sqrt(u);
  if (r < 0.1) {
    const auto s = detail::logistic_series(u);
    return 2.0 * s.d1 * s.d1 / (s.d0 * s.d0 * s.d0) - s.d2 / (s.d0 * s.d0);
  }
  const double e = std::exp(-r);
  const double p4 = std::pow(1.0 + e, 4);
  const double om = -std::expm1(-r);
  return e * om * om / (2.0 * r * r * p4) -
         e * (r * (1.0 + e * e) - om * (1.0 + e)) / (4.0 * r * r * r * p4);
}

inline double cauchy(double u) { return 1.0 / (1.0 + u); }
inline double cauchy_sub(double u) {
  const double t = 1.0 + u;
  return 1.0 / (t * t);
}
inline double cauchy_d2(double u) {
  const double t = 1.0 + u;
  return 2.0 / (t * t * t);
}

}  // namespace profiles

/// The nine cataloged kernels, flags as in the standard assumption table.
inline const std::vector<KernelSpec>& kernel_catalog() {
  using G = Guarantee;
  namespace p = profiles;
  static const std::vector<KernelSpec> catalog = {
      {"gaussian", p::gaussian, p::gaussian, p::gaussian_d2, {},
       true, true, true, true, std::nullopt, std::nullopt,
       G::guaranteed, G::guaranteed, "analytic"},
      {"epanechnikov", p::epanechnikov, p::epanechnikov_sub, p::epanechnikov_d2, {1.0},
       true, false, true, false, 2, 1.0,
       G::guaranteed, G::guaranteed, "finite-time convergence"},
      {"biweight", p::biweight, p::biweight_sub, p::biweight_d2, {1.0},
       true, true, true, true, 4, 1.0,
       G::guaranteed, G::guaranteed, "piecewise polynomial"},
      {"triweight", p::triweight, p::triweight_sub, p::triweight_d2, {1.0},
       true, true, true, true, 6, 1.0,
       G::guaranteed, G::guaranteed, "piecewise polynomial"},
      {"tricube", p::tricube, p::tricube_sub, p::tricube_d2, {0.0, 1.0},
       false, true, true, true, std::nullopt, 1.0,
       G::not_ensured, G::not_ensured, "f(y_t) convergence not ensured"},
      {"cosine", p::cosine, p::cosine_sub, p::cosine_d2, {1.0},
       true, false, true, false, std::nullopt, 1.0,
       G::conditional, G::conditional, "conditional on trajectory assumptions"},
      {"logistic", p::logistic, p::logistic_sub, p::logistic_d2, {},
       true, true, true, true, std::nullopt, std::nullopt,
       G::guaranteed, G::guaranteed, "analytic"},
      {"cauchy", p::cauchy, p::cauchy_sub, p::cauchy_d2, {},
       true, true, true, true, std::nullopt, std::nullopt,
       G::guaranteed, G::guaranteed, "analytic"},
      {"threehalves", p::threehalves, p::threehalves_sub, p::threehalves_d2, {1.0},
       true, false, true, true, std::nullopt, 1.0,
       G::conditional, G::conditional, "conditional on trajectory assumptions"},
  };
  return catalog;
}

class UnknownKernel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string kernel_names() {
  std::string out;
  for (const auto& k : kernel_catalog()) {
    if (!out.empty()) out += ", ";
    out += k.name;
  }
  return out;
}

/// Case-insensitive catalog lookup.
inline const KernelSpec& kernel_by_name(std::string_view name) {
  std::string lowered(name);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (const auto& k : kernel_catalog())
    if (k.name == lowered) return k;
  throw UnknownKernel("unknown kernel '" + std::string(name) +
                      "'; available: " + kernel_names());
}

namespace detail {
inline void check_u(double u) {
  if (!(u >= 0.0)) throw std::domain_error("profile argument must be a non-negative number");
}
}  // namespace detail

inline double profile_value(const KernelSpec& kernel, double u) {
  detail::check_u(u);
  if (kernel.support_radius_sq_half && u >= *kernel.support_radius_sq_half) return 0.0;
  return kernel.scale * kernel.profile(u);
}

inline double subgradient_profile_value(const KernelSpec& kernel, double u) {
  detail::check_u(u);
  if (kernel.support_radius_sq_half && u >= *kernel.support_radius_sq_half) return 0.0;
  return kernel.scale * kernel.subgradient_profile(u);
}

/// Index of the knot within kKnotTolerance of u, if any.
inline std::optional<std::size_t> knot_near(const KernelSpec& kernel, double u) {
  for (std::size_t i = 0; i < kernel.knots.size(); ++i)
    if (std::abs(u - kernel.knots[i]) <= kKnotTolerance) return i;
  return std::nullopt;
}

/// K''(u), absent when the kernel has none or u sits on a knot.
inline std::optional<double> second_profile_derivative_value(const KernelSpec& kernel,
                                                             double u) {
  detail::check_u(u);
  if (kernel.second_profile_derivative == nullptr || knot_near(kernel, u)) return std::nullopt;
  if (kernel.support_radius_sq_half && u >= *kernel.support_radius_sq_half) return 0.0;
  return kernel.scale * kernel.second_profile_derivative(u);
}

inline double kernel_value(const KernelSpec& kernel, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (!x.allFinite()) throw std::domain_error("kernel_value: non-finite coordinate");
  return profile_value(kernel, x.squaredNorm() / 2.0);
}

inline std::optional<int> max_poly_degree(const KernelSpec& kernel) {
  return kernel.max_poly_degree;
}

/// Z with Z * integral of K(|x|^2/2) over R^d equal to 1.
inline double normalization_constant(const KernelSpec& kernel, int d) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  if (kernel.name == "cauchy" && d >= 2)
    throw std::domain_error("cauchy kernel is not integrable for d >= 2");
  using boost::math::quadrature::gauss_kronrod;
  auto radial = [&](double r) {
    return profile_value(kernel, r * r / 2.0) * std::pow(r, d - 1);
  };
  const double upper = kernel.support_radius_sq_half
                           ? std::sqrt(2.0 * *kernel.support_radius_sq_half)
                           : std::numeric_limits<double>::infinity();
  const double integral = gauss_kronrod<double, 61>::integrate(radial, 0.0, upper, 20, 1e-13);
  const double sphere = 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
  return 1.0 / (sphere * integral);
}

}  // namespace modeseek
