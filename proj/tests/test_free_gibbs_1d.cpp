#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "freemoment/free_gibbs_1d.hpp"
#include "oracles.hpp"

using freemoment::EvenPotential;
using freemoment::Error;
using freemoment::ErrorCode;
using freemoment::GridMeasure;

namespace {

constexpr double kPi = oracle::kPi;

const double kQuarticRadius = 2.0 / std::pow(3.0, 0.25);

// Normalized quartic equilibrium density (1/2π)(x² + r²/2)√(r² − x²).
double quartic_density(double x) {
  const double r = kQuarticRadius;
  return std::abs(x) < r ? (x * x + 0.5 * r * r) * std::sqrt(r * r - x * x) / (2 * kPi) : 0.0;
}

// Density of Y = X³ for X with the quartic density above.
double quartic_pushforward_density(double y) {
  const double r = kQuarticRadius;
  const double a = std::cbrt(std::abs(y));
  if (a >= r) return 0.0;
  return r * r * r / (12 * kPi) * (1.0 / (a * a) + 2.0 / (r * r)) * std::sqrt(1.0 - a * a / (r * r));
}

}  // namespace

TEST(EvenPotential, EvaluationAndParsing) {
  const auto u = EvenPotential::parse("0.5,0.25");
  EXPECT_EQ(u.degree(), 4);
  EXPECT_DOUBLE_EQ(u(2.0), 0.5 * 4 + 0.25 * 16);
  EXPECT_DOUBLE_EQ(u.derivative(2.0), 2.0 + 8.0);
  EXPECT_THROW(EvenPotential::parse("0.5,abc"), Error);
  EXPECT_THROW(EvenPotential::parse("0.5,-1"), Error);
  EXPECT_THROW(EvenPotential::from_polynomial({0, 0, 0.5, 1.0}), Error);
  EXPECT_NO_THROW(EvenPotential::from_polynomial({3.0, 0.0, 0.5}));
}

TEST(EvenPotential, OddTermMessage) {
  try {
    EvenPotential::from_polynomial({0, 1.0, 0.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_input);
    EXPECT_NE(std::string(e.what()).find("even"), std::string::npos);
  }
}

TEST(Fourier, Cubic) {
  const double r = 1.3;
  const auto a = freemoment::fourier_coefficients([](double x) { return x * x * x; }, r, 6);
  const double r3 = r * r * r;
  for (int n = 0; n <= 6; ++n) {
    const double expected = n == 1 ? -3 * r3 / 8 : (n == 3 ? -r3 / 8 : 0.0);
    EXPECT_NEAR(a[n], expected, 1e-12) << n;
  }
}

TEST(Fourier, Linear) {
  const auto a = freemoment::fourier_coefficients([](double x) { return x; }, 2.5, 4);
  EXPECT_NEAR(a[1], -1.25, 1e-14);
  for (int n : {0, 2, 3, 4}) EXPECT_NEAR(a[n], 0.0, 1e-14);
}

TEST(Fourier, OddPolynomialHasNoEvenModes) {
  const auto a = freemoment::fourier_coefficients(
      [](double x) { return 0.3 * x - 2 * x * x * x + 0.7 * std::pow(x, 7); }, 1.7, 9);
  for (int n = 0; n <= 9; n += 2) EXPECT_NEAR(a[n], 0.0, 1e-12);
}

TEST(Fourier, RejectsSmallN) {
  EXPECT_THROW(freemoment::fourier_coefficients([](double x) { return x; }, 1.0, 0), Error);
}

TEST(Radius, QuadraticAndQuartic) {
  EXPECT_NEAR(freemoment::solve_radius(EvenPotential({0.5})), 2.0, 1e-12);
  EXPECT_NEAR(freemoment::solve_radius(EvenPotential({0.0, 0.25})), kQuarticRadius, 1e-10);
  EXPECT_NEAR(kQuarticRadius, 1.5196713713, 1e-10);
}

TEST(Radius, DilationScalesRadius) {
  const EvenPotential u({0.0, 0.25});
  for (double c : {0.5, 2.0, 3.0}) {
    // v(x) = u(x/c) has a support dilated by c.
    EXPECT_NEAR(freemoment::solve_radius(u.dilated(1.0 / c)), c * kQuarticRadius, 1e-10);
  }
}

TEST(Radius, ConditionHolds) {
  for (const auto& u : {EvenPotential({0.5}), EvenPotential({0.0, 0.25}), EvenPotential({0.5, 0.25}),
                        EvenPotential({0.2, 0.0, 0.1})}) {
    const double r = freemoment::solve_radius(u);
    const auto a = freemoment::fourier_coefficients([&](double x) { return u.derivative(x); }, r,
                                                    u.degree() - 1);
    EXPECT_NEAR(r * a[1], -2.0, 1e-12);
  }
}

TEST(Density, Quartic) {
  const auto sol = freemoment::free_gibbs_measure(EvenPotential({0.0, 0.25}));
  const double r = sol.radius;
  for (int j = 1; j < 1000; ++j) {
    const double x = -r + 2 * r * j / 1000.0;
    const double theta = std::acos(-x / r);
    const double trig = r * r * r / (8 * kPi) * (3 * std::sin(theta) + std::sin(3 * theta));
    EXPECT_NEAR(freemoment::gibbs_density(sol, x), trig, 1e-10);
    EXPECT_NEAR(freemoment::gibbs_density(sol, x), quartic_density(x), 1e-10);
  }
}

TEST(Density, Semicircle) {
  const auto sol = freemoment::free_gibbs_measure(EvenPotential({0.5}));
  for (int j = 1; j < 400; ++j) {
    const double x = -2 + 4 * j / 400.0;
    EXPECT_NEAR(freemoment::gibbs_density(sol, x), oracle::semicircle_density(x), 1e-10);
  }
}

TEST(Density, VanishesAtEdgesAndRejectsOutside) {
  const auto sol = freemoment::free_gibbs_measure(EvenPotential({0.5, 0.25}));
  const double r = sol.radius;
  EXPECT_NEAR(freemoment::gibbs_density(sol, r * (1 - 1e-12)), 0.0, 1e-5);
  EXPECT_THROW(freemoment::gibbs_density(sol, r), Error);
  EXPECT_THROW(freemoment::gibbs_density(sol, -r - 1), Error);
}

TEST(Gibbs, SemicircleMeasure) {
  const auto sol = freemoment::free_gibbs_measure(EvenPotential({0.5}));
  EXPECT_NEAR(sol.radius, 2.0, 1e-12);
  EXPECT_NEAR(freemoment::moment(sol.measure, 2), 1.0, 1e-8);
  EXPECT_LT(freemoment::wasserstein2_sq(sol.measure, GridMeasure::semicircle()), 1e-20);
}

TEST(Gibbs, MassWithoutNormalization) {
  for (const auto& u : {EvenPotential({0.5}), EvenPotential({0.0, 0.25}), EvenPotential({0.5, 0.25}),
                        EvenPotential({1.0, 0.0, 0.3})}) {
    const auto sol = freemoment::free_gibbs_measure(u);
    EXPECT_NEAR(freemoment::gibbs_cdf(sol, sol.radius * (1 - 1e-15)), 1.0, 1e-8);
    EXPECT_NEAR(sol.measure.total_mass(), 1.0, 1e-8);
  }
}

TEST(Gibbs, HilbertResidual) {
  for (const auto& u : {EvenPotential({0.5}), EvenPotential({0.0, 0.25}), EvenPotential({0.5, 0.25})}) {
    const auto sol = freemoment::free_gibbs_measure(u);
    EXPECT_LT(freemoment::hilbert_residual(sol, u), 1e-4);
  }
}

TEST(Gibbs, HilbertResidualDetectsPerturbation) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  const auto nodes = GridMeasure::chebyshev_nodes(-2, 2, 2048);
  std::vector<double> dens(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j)
    dens[j] = oracle::semicircle_density(nodes[j]) * (1 + noise(rng));
  const auto noisy = GridMeasure::from_samples(nodes, dens, {}, true);
  freemoment::GibbsSolution sol{2.0, {0.0, -1.0}, noisy};
  EXPECT_GT(freemoment::hilbert_residual(sol, EvenPotential({0.5})), 1e-2);
}

TEST(Gibbs, ScalarSchwingerDyson) {
  for (const auto& u : {EvenPotential({0.5}), EvenPotential({0.0, 0.25}), EvenPotential({0.5, 0.25})}) {
    const auto sol = freemoment::free_gibbs_measure(u);
    const double v = freemoment::expectation(sol.measure, [&](double x) { return x * u.derivative(x); });
    EXPECT_NEAR(v, 1.0, 1e-6);
  }
}

TEST(Gibbs, Evenness) {
  const auto sol = freemoment::free_gibbs_measure(EvenPotential({0.5, 0.25}));
  for (double x : {0.1, 0.5, 0.9, 1.2}) {
    EXPECT_NEAR(freemoment::gibbs_density(sol, x), freemoment::gibbs_density(sol, -x), 1e-12);
  }
}

TEST(Gibbs, ScalingCovariance) {
  const EvenPotential u({0.5, 0.25});
  const auto su = freemoment::free_gibbs_measure(u);
  for (double c : {0.5, 2.0}) {
    const auto sv = freemoment::free_gibbs_measure(u.dilated(c));
    for (double x : {-0.4, 0.0, 0.3, 0.6}) {
      if (std::abs(c * x) >= su.radius) continue;
      EXPECT_NEAR(freemoment::gibbs_density(sv, x), c * freemoment::gibbs_density(su, c * x), 1e-8);
    }
  }
}

TEST(Gibbs, OneCutViolation) {
  try {
    freemoment::free_gibbs_measure(EvenPotential({-1.5, 0.25}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::one_cut_violated);
  }
  // The double well −x² + x⁴/4 is exactly critical: the density touches zero at the origin.
  const auto crit = freemoment::free_gibbs_measure(EvenPotential({-1.0, 0.25}));
  EXPECT_NEAR(freemoment::gibbs_density(crit, 0.0), 0.0, 1e-12);
}

TEST(Gibbs, QuarticPushforwardUnderCube) {
  const auto sol = freemoment::free_gibbs_measure(EvenPotential({0.0, 0.25}));
  const auto mu = freemoment::pushforward_monotone(
      sol.measure, [](double x) { return x * x * x; }, [](double x) { return 3 * x * x; });
  EXPECT_NEAR(mu.total_mass(), 1.0, 1e-12);
  const double r3 = std::pow(kQuarticRadius, 3);
  double worst = 0.0;
  const auto s = mu.samples();
  for (std::size_t j = 0; j < s.nodes.size(); ++j) {
    const double y = s.nodes[j];
    if (std::abs(y) < 0.05 || std::abs(y) > r3 * (1 - 1e-9)) continue;
    worst = std::max(worst, std::abs(s.density[j] - quartic_pushforward_density(y)));
  }
  EXPECT_LT(worst, 1e-6);
  // Independent check of the formula: it integrates to one.
  const double mass = oracle::integrate(quartic_pushforward_density, 0.0, r3, 400000) * 2;
  EXPECT_NEAR(mass, 1.0, 1e-3);
}

// The two-point example. The density (1/π)arccosh(1/|x|) on [−1,1] satisfies
// 2πHν = π·sign(x); rescaled to (1/π²)arccosh(π/|x|) on [−π,π] it satisfies
// 2πHν = sign(x), the Gibbs measure of u = |x| whose derivative pushes it to ½δ₋₁ + ½δ₁.
static GridMeasure arccosh_measure(double c) {
  auto rho = [c](double x) {
    const double a = std::abs(x) / c;
    return a > 0 && a < 1 ? std::acosh(1.0 / a) / (kPi * c) : 0.0;
  };
  auto cdf = [c](double x) {
    const double a = std::min(std::abs(x) / c, 1.0);
    const double part = a > 0 ? (a * std::acosh(1.0 / a) + std::asin(a)) / kPi : 0.0;
    return 0.5 + (x < 0 ? -part : part);
  };
  return GridMeasure::from_density(-c, c, rho, 4096, cdf);
}

TEST(Gibbs, TwoPointExampleDensityHilbertTransform) {
  const auto stated = arccosh_measure(1.0);
  const auto rescaled = arccosh_measure(kPi);
  EXPECT_NEAR(stated.total_mass(), 1.0, 1e-12);
  EXPECT_NEAR(rescaled.total_mass(), 1.0, 1e-12);
  for (double s : {0.2, 0.4, 0.6, 0.8}) {
    EXPECT_NEAR(2 * kPi * freemoment::hilbert_transform(stated, s), kPi, 5e-3) << s;
    EXPECT_NEAR(2 * kPi * freemoment::hilbert_transform(stated, -s), -kPi, 5e-3) << s;
    EXPECT_NEAR(2 * kPi * freemoment::hilbert_transform(rescaled, kPi * s), 1.0, 5e-3) << s;
  }
}
