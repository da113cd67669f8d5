#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "modeseek/kernels.hpp"
#include "oracles.hpp"

using namespace modeseek;

namespace {

double support_bound(const KernelSpec& k) { return k.support_radius_sq_half.value_or(2.0); }

bool near_any_knot(const KernelSpec& k, double u, double band) {
  for (double knot : k.knots)
    if (std::abs(u - knot) < band) return true;
  return false;
}

}  // namespace

TEST(Kernels, ProfileExamples) {
  EXPECT_DOUBLE_EQ(profile_value(kernel_by_name("biweight"), 0.5), 0.25);
  EXPECT_EQ(profile_value(kernel_by_name("epanechnikov"), 2.0), 0.0);
  EXPECT_NEAR(profile_value(kernel_by_name("gaussian"), 0.45125), std::exp(-0.45125), 1e-15);
  EXPECT_NEAR(profile_value(kernel_by_name("gaussian"), 0.45125), 0.636831614371743, 1e-14);
}

TEST(Kernels, SubgradientExamples) {
  const auto& epa = kernel_by_name("epanechnikov");
  EXPECT_EQ(subgradient_profile_value(epa, 0.5), 1.0);
  EXPECT_EQ(subgradient_profile_value(epa, 1.0), 0.0);  // right-derivative convention
  EXPECT_DOUBLE_EQ(subgradient_profile_value(kernel_by_name("biweight"), 0.5), 1.0);
}

TEST(Kernels, KernelValueExamples) {
  EXPECT_EQ(kernel_value(kernel_by_name("gaussian"), Eigen::Vector3d::Zero()), 1.0);
  EXPECT_EQ(kernel_value(kernel_by_name("biweight"), Eigen::Vector2d(1.0, 1.0)), 0.0);
  EXPECT_DOUBLE_EQ(kernel_value(kernel_by_name("triweight"), Eigen::VectorXd::Constant(1, 1.0)),
                   0.125);
}

TEST(Kernels, DomainErrors) {
  const auto& g = kernel_by_name("gaussian");
  EXPECT_THROW(profile_value(g, -1e-3), std::domain_error);
  EXPECT_THROW(subgradient_profile_value(g, -1.0), std::domain_error);
  EXPECT_THROW(profile_value(g, std::nan("")), std::domain_error);
  EXPECT_THROW(kernel_value(g, Eigen::Vector2d(1.0, std::numeric_limits<double>::infinity())),
               std::domain_error);
}

TEST(Kernels, LookupIsCaseInsensitive) {
  EXPECT_EQ(kernel_by_name("GaUsSiAn").name, "gaussian");
  EXPECT_EQ(kernel_by_name("ThreeHalves").name, "threehalves");
  try {
    kernel_by_name("triangle");
    FAIL() << "expected UnknownKernel";
  } catch (const UnknownKernel& e) {
    EXPECT_NE(std::string(e.what()).find("epanechnikov"), std::string::npos);
  }
}

TEST(Kernels, MaxPolyDegree) {
  EXPECT_EQ(max_poly_degree(kernel_by_name("epanechnikov")), 2);
  EXPECT_EQ(max_poly_degree(kernel_by_name("biweight")), 4);
  EXPECT_EQ(max_poly_degree(kernel_by_name("triweight")), 6);
  EXPECT_FALSE(max_poly_degree(kernel_by_name("gaussian")).has_value());
  EXPECT_FALSE(max_poly_degree(kernel_by_name("tricube")).has_value());
}

TEST(Kernels, AssumptionFlagsMatchTable) {
  struct Row {
    const char* name;
    bool asm2, asm3;
  };
  const Row rows[] = {{"biweight", true, true},    {"threehalves", true, false},
                      {"triweight", true, true},   {"tricube", false, true},
                      {"cosine", true, false},     {"epanechnikov", true, false},
                      {"gaussian", true, true},    {"logistic", true, true},
                      {"cauchy", true, true}};
  EXPECT_EQ(kernel_catalog().size(), std::size(rows));
  for (const auto& r : rows) {
    const auto& k = kernel_by_name(r.name);
    EXPECT_EQ(k.satisfies_asm2, r.asm2) << r.name;
    EXPECT_EQ(k.satisfies_asm3, r.asm3) << r.name;
    EXPECT_TRUE(k.satisfies_asm4) << r.name;
  }
  EXPECT_EQ(kernel_by_name("tricube").convergence, Guarantee::not_ensured);
  EXPECT_EQ(kernel_by_name("cosine").convergence, Guarantee::conditional);
  EXPECT_EQ(kernel_by_name("threehalves").rate, Guarantee::conditional);
  EXPECT_EQ(kernel_by_name("biweight").convergence, Guarantee::guaranteed);
}

TEST(Kernels, NormalizationConstants) {
  const double s2pi = std::sqrt(2.0 * std::numbers::pi);
  EXPECT_NEAR(normalization_constant(kernel_by_name("gaussian"), 1), 1.0 / s2pi, 1e-12);
  EXPECT_NEAR(normalization_constant(kernel_by_name("gaussian"), 2), 1.0 / (s2pi * s2pi), 1e-12);
  EXPECT_NEAR(normalization_constant(kernel_by_name("gaussian"), 3), std::pow(s2pi, -3), 1e-12);
  EXPECT_NEAR(normalization_constant(kernel_by_name("epanechnikov"), 1),
              3.0 / (4.0 * std::numbers::sqrt2), 1e-12);
  EXPECT_NEAR(normalization_constant(kernel_by_name("epanechnikov"), 2), 1.0 / std::numbers::pi,
              1e-12);

  // Simpson oracle over the line
  for (const char* name : {"biweight", "triweight", "cosine", "tricube", "threehalves"}) {
    const auto& k = kernel_by_name(name);
    const double r = std::sqrt(2.0);
    const double integral = oracle::simpson(
        [&](double x) { return k.profile(std::min(x * x / 2.0, 1.0)); }, -r, r, 1000000);
    EXPECT_NEAR(normalization_constant(k, 1) * integral, 1.0, 2e-8) << name;
  }
  const double biweight_closed = 15.0 / (16.0 * std::numbers::sqrt2);
  EXPECT_NEAR(normalization_constant(kernel_by_name("biweight"), 1), biweight_closed, 1e-12);
  EXPECT_NEAR(normalization_constant(kernel_by_name("cauchy"), 1),
              1.0 / (std::numbers::pi * std::numbers::sqrt2), 1e-10);
  EXPECT_THROW(normalization_constant(kernel_by_name("cauchy"), 2), std::domain_error);
}

TEST(Kernels, ProfileNonNegativeAndNonIncreasing) {
  for (const auto& k : kernel_catalog()) {
    const double top = 2.0 * support_bound(k);
    double prev = profile_value(k, 0.0);
    for (int i = 0; i <= 10000; ++i) {
      const double u = top * i / 10000.0;
      const double v = profile_value(k, u);
      ASSERT_GE(v, 0.0) << k.name << " u=" << u;
      if (k.satisfies_asm2) {
        ASSERT_LE(v, profile_value(k, 0.0)) << k.name;
        ASSERT_LE(v, prev + 1e-15) << k.name << " u=" << u;
      }
      prev = v;
    }
  }
}

TEST(Kernels, SubgradientNonNegativeNonIncreasingBounded) {
  for (const auto& k : kernel_catalog()) {
    if (!k.satisfies_asm2) continue;
    const double top = 2.0 * support_bound(k);
    const double at0 = subgradient_profile_value(k, 0.0);
    double prev = at0;
    for (int i = 0; i <= 10000; ++i) {
      const double u = top * i / 10000.0;
      const double s = subgradient_profile_value(k, u);
      ASSERT_GE(s, 0.0) << k.name;
      ASSERT_LE(s, at0 + 1e-15) << k.name;
      ASSERT_LE(s, prev + 1e-15) << k.name << " u=" << u;
      prev = s;
    }
  }
}

TEST(Kernels, SubgradientIsMinusProfileDerivativeOffKnots) {
  for (const auto& k : kernel_catalog()) {
    const double top = 2.0 * support_bound(k);
    for (int i = 1; i < 10000; ++i) {
      const double u = top * i / 10000.0;
      if (near_any_knot(k, u, 1e-3) || u < 1e-3) continue;
      const double fd =
          -oracle::central_difference([&](double v) { return profile_value(k, v); }, u, 1e-6);
      ASSERT_NEAR(subgradient_profile_value(k, u), fd, 1e-6) << k.name << " u=" << u;
    }
    // value at zero is the right derivative
    if (near_any_knot(k, 0.0, 1e-3)) continue;
    const double h = 1e-7;
    const double right = -(profile_value(k, h) - profile_value(k, 0.0)) / h;
    EXPECT_NEAR(subgradient_profile_value(k, 0.0), right, 1e-5) << k.name;
  }
}

TEST(Kernels, SecondDerivativeMatchesDifferencedSubgradient) {
  for (const auto& k : kernel_catalog()) {
    const double top = 2.0 * support_bound(k);
    for (int i = 1; i < 2000; ++i) {
      const double u = top * i / 2000.0;
      if (near_any_knot(k, u, 1e-2) || u < 1e-2) continue;
      const auto d2 = second_profile_derivative_value(k, u);
      ASSERT_TRUE(d2.has_value()) << k.name;
      const double fd = -oracle::central_difference(
          [&](double v) { return subgradient_profile_value(k, v); }, u, 1e-6);
      ASSERT_NEAR(*d2, fd, 1e-6 * std::max(1.0, std::abs(fd))) << k.name << " u=" << u;
    }
  }
  // series branches near zero
  for (const char* name : {"cosine", "logistic"}) {
    const auto& k = kernel_by_name(name);
    for (double u : {1e-6, 1e-4, 0.009, 0.011, 0.04}) {
      const double fd = -oracle::central_difference(
          [&](double v) { return subgradient_profile_value(k, v); }, u, 1e-7);
      EXPECT_NEAR(*second_profile_derivative_value(k, u), fd, 1e-6) << name << " u=" << u;
    }
  }
  EXPECT_FALSE(second_profile_derivative_value(kernel_by_name("biweight"), 1.0).has_value());
  EXPECT_FALSE(second_profile_derivative_value(kernel_by_name("biweight"), 1.0 + 5e-10).has_value());
  EXPECT_TRUE(second_profile_derivative_value(kernel_by_name("biweight"), 1.0 + 1e-8).has_value());
}

TEST(Kernels, MidpointConvexityOfFlaggedProfiles) {
  std::mt19937_64 rng(7);
  for (const auto& k : kernel_catalog()) {
    if (!k.satisfies_asm2) continue;
    std::uniform_real_distribution<double> ud(0.0, 2.0 * support_bound(k));
    for (int i = 0; i < 10000; ++i) {
      const double u = ud(rng), v = ud(rng);
      ASSERT_LE(profile_value(k, 0.5 * (u + v)),
                0.5 * (profile_value(k, u) + profile_value(k, v)) + 1e-12)
          << k.name << " u=" << u << " v=" << v;
    }
  }
}

TEST(Kernels, TricubeConvexityWitnessExists) {
  const auto& k = kernel_by_name("tricube");
  bool found = false;
  for (int i = 0; i <= 200 && !found; ++i)
    for (int j = i + 1; j <= 200 && !found; ++j) {
      const double u = i / 100.0, v = j / 100.0;
      if (profile_value(k, 0.5 * (u + v)) > 0.5 * (profile_value(k, u) + profile_value(k, v)) + 1e-12)
        found = true;
    }
  EXPECT_TRUE(found);
}

TEST(Kernels, KernelMinorizerDominance) {
  std::mt19937_64 rng(11);
  for (const auto& k : kernel_catalog()) {
    if (!k.satisfies_asm2) continue;
    for (int trial = 0; trial < 1000; ++trial) {
      const int d = 1 + trial % 3;
      const Eigen::VectorXd x = oracle::random_vector(rng, d, 1.0);
      const Eigen::VectorXd xp = oracle::random_vector(rng, d, 1.0);
      const double up = xp.squaredNorm() / 2.0;
      auto minorizer = [&](const Eigen::VectorXd& z) {
        return kernel_value(k, xp) +
               subgradient_profile_value(k, up) / 2.0 * (xp.squaredNorm() - z.squaredNorm());
      };
      ASSERT_GE(kernel_value(k, x), minorizer(x) - 1e-12) << k.name;
      ASSERT_EQ(kernel_value(k, xp), minorizer(xp)) << k.name;
    }
  }
}

TEST(Kernels, ScaledKernel) {
  const auto k = kernel_by_name("biweight").scaled(3.0);
  EXPECT_DOUBLE_EQ(profile_value(k, 0.5), 0.75);
  EXPECT_DOUBLE_EQ(subgradient_profile_value(k, 0.5), 3.0);
  EXPECT_THROW(kernel_by_name("biweight").scaled(0.0), std::invalid_argument);
}
