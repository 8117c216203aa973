#pragma once

// Independent reference computations used by the tests. Nothing here calls into
// the library's numerical routines.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "freemoment/measure1d.hpp"

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

inline double semicircle_density(double x) {
  return std::abs(x) < 2.0 ? std::sqrt(4.0 - x * x) / (2.0 * kPi) : 0.0;
}

inline double semicircle_cdf(double x) {
  const double u = std::clamp(x / 2.0, -1.0, 1.0);
  return 0.5 + x * std::sqrt(std::max(0.0, 4.0 - x * x)) / (4.0 * kPi) + std::asin(u) / kPi;
}

/// ∫ g dρ over [a,b] with t = a + (b−a)(1−cos φ)/2 and a midpoint rule in φ.
inline double integrate(const std::function<double(double)>& rho_g, double a, double b, int n = 20000) {
  double acc = 0.0;
  const double dphi = kPi / n;
  for (int k = 0; k < n; ++k) {
    const double phi = (k + 0.5) * dphi;
    const double t = a + 0.5 * (b - a) * (1.0 - std::cos(phi));
    const double jac = 0.5 * (b - a) * std::sin(phi);
    acc += rho_g(t) * jac * dphi;
  }
  return acc;
}

/// (1/π) PV ∫ ρ(t)/(x−t) dt by singularity subtraction and cosine-mapped midpoints.
inline double hilbert_pv(const std::function<double(double)>& rho, double a, double b, double x,
                         int n = 200000) {
  if (x <= a || x >= b) {
    return integrate([&](double t) { return rho(t) / (x - t); }, a, b, n) / kPi;
  }
  const double rx = rho(x);
  const double reg = integrate(
      [&](double t) { return t == x ? 0.0 : (rho(t) - rx) / (x - t); }, a, b, n);
  return (reg + rx * std::log(std::abs((x - a) / (b - x)))) / kPi;
}

/// Brute-force ∬ −log|s−t| dρ dρ on two staggered cosine grids.
inline double log_energy_bruteforce(const std::function<double(double)>& rho, double a, double b,
                                    int n = 2000) {
  std::vector<double> xs(n), ws(n), ys(n), vs(n);
  const double dphi = kPi / n;
  for (int k = 0; k < n; ++k) {
    const double p = (k + 0.5) * dphi, q = (k + 0.25) * dphi;
    xs[k] = a + 0.5 * (b - a) * (1.0 - std::cos(p));
    ws[k] = rho(xs[k]) * 0.5 * (b - a) * std::sin(p) * dphi;
    ys[k] = a + 0.5 * (b - a) * (1.0 - std::cos(q));
    vs[k] = rho(ys[k]) * 0.5 * (b - a) * std::sin(q) * dphi;
  }
  double wsum = 0.0, vsum = 0.0;
  for (int k = 0; k < n; ++k) {
    wsum += ws[k];
    vsum += vs[k];
  }
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) acc -= ws[i] * vs[j] * std::log(std::abs(xs[i] - ys[j]));
  return acc / (wsum * vsum);
}

/// Number of non-crossing pair partitions of a word that only pair equal letters.
inline double noncrossing_pairings(const std::vector<int>& w) {
  const int n = static_cast<int>(w.size());
  if (n % 2) return 0.0;
  std::map<std::pair<int, int>, double> memo;
  std::function<double(int, int)> count = [&](int i, int j) -> double {
    if (i > j) return 1.0;
    if ((j - i + 1) % 2) return 0.0;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    double total = 0.0;
    for (int k = i + 1; k <= j; k += 2)
      if (w[i] == w[k]) total += count(i + 1, k - 1) * count(k + 1, j);
    memo[key] = total;
    return total;
  };
  return count(0, n - 1);
}

/// Second and fourth moments of the equilibrium measure of ½x² + g x⁴ (g > −1/48),
/// from a² solving 12 g a⁴ + a² − 1 = 0.
inline std::pair<double, double> quartic_model_moments(double g) {
  const double a2 = g == 0.0 ? 1.0 : (std::sqrt(1.0 + 48.0 * g) - 1.0) / (24.0 * g);
  return {a2 * (4.0 - a2) / 3.0, a2 * a2 * (3.0 - a2)};
}

/// Random absolutely continuous test measure: piecewise-linear density on a
/// random interval with random positive node values.
inline freemoment::GridMeasure random_measure(std::mt19937_64& rng, int nodes = 64) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double a = -3.0 + 4.0 * u(rng);
  const double b = a + 0.5 + 4.0 * u(rng);
  std::vector<double> x(nodes), d(nodes);
  for (int k = 0; k < nodes; ++k) {
    x[k] = a + (b - a) * k / (nodes - 1);
    d[k] = 0.05 + u(rng);
  }
  if (u(rng) < 0.5) d.front() = d.back() = 0.0;
  return freemoment::GridMeasure::from_samples(x, d, {}, true);
}

}  // namespace oracle
