#pragma once

// Seeded consistency checks run by `freemoment verify` and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "freemoment/free_gibbs_1d.hpp"
#include "freemoment/free_transport.hpp"
#include "freemoment/nc_series.hpp"
#include "freemoment/random_series.hpp"
#include "freemoment/sd_moments.hpp"

namespace freemoment::checks {

struct CheckResult {
  std::string name;
  int trials = 0;
  double worst = 0.0;      // largest observed error or ratio
  double threshold = 0.0;  // passes when worst ≤ threshold
  bool passed() const { return worst <= threshold; }
};

namespace check_detail {
inline double max_diff(const NCSeries& a, const NCSeries& b) { return (a - b).max_abs_coeff(); }
}  // namespace check_detail

/// J𝒟V applied to Y equals 𝒩𝒟V.
inline CheckResult euler_identity(std::mt19937_64& rng, int trials) {
  CheckResult r{"euler_identity", trials, 0.0, 1e-12};
  for (int t = 0; t < trials; ++t) {
    const int n = 1 + t % 4, D = 7;
    const auto g = cyclic_gradient(randseries::random_series(rng, n, D, 10));
    const auto lhs = jacobian(g).apply(NCSeries::identity_map(n, D));
    for (std::size_t i = 0; i < g.size(); ++i) r.worst = std::max(r.worst, check_detail::max_diff(lhs[i], N(g[i])));
  }
  return r;
}

/// (J𝒟V)#𝒟V = 𝒟(½|𝒟V|²), compared below the truncation degree.
inline CheckResult gradient_square_identity(std::mt19937_64& rng, int trials) {
  CheckResult r{"gradient_square_identity", trials, 0.0, 1e-12};
  for (int t = 0; t < trials; ++t) {
    const int n = 1 + t % 3, D = 8;
    const auto g = cyclic_gradient(randseries::random_series(rng, n, D, 10));
    NCSeries sq(n, D);
    for (const auto& gi : g) sq += gi * gi;
    const auto rhs = cyclic_gradient(sq * 0.5);
    const auto lhs = jacobian(g).apply(g);
    for (std::size_t i = 0; i < g.size(); ++i)
      r.worst = std::max(r.worst, check_detail::max_diff(lhs[i].truncated(D - 1), rhs[i].truncated(D - 1)));
  }
  return r;
}

/// 𝒟 ∘ 𝒮Π = 𝒟.
inline CheckResult gradient_cyclic_part(std::mt19937_64& rng, int trials) {
  CheckResult r{"gradient_cyclic_part", trials, 0.0, 1e-13};
  for (int t = 0; t < trials; ++t) {
    const int n = 1 + t % 4;
    const auto f = randseries::random_series(rng, n, 7, 12);
    for (int i = 0; i < n; ++i)
      r.worst = std::max(r.worst, check_detail::max_diff(cyclic_gradient(S(Pi(f)), i), cyclic_gradient(f, i)));
  }
  return r;
}

/// In one variable 𝒟 is d/dx.
inline CheckResult single_variable_derivative(std::mt19937_64& rng, int trials) {
  CheckResult r{"single_variable_derivative", trials, 0.0, 1e-13};
  for (int t = 0; t < trials; ++t) {
    const auto f = randseries::random_series(rng, 1, 12, 8);
    NCSeries d(1, 12);
    for (const auto& [w, c] : f.terms())
      if (w.size() > 0) d.add_term(Word::power(0, w.size() - 1), c * w.size());
    r.worst = std::max(r.worst, check_detail::max_diff(cyclic_gradient(f, 0), d));
  }
  return r;
}

/// Odd-degree mass of picard_map on random even (V, W, τ); must be exactly zero.
inline CheckResult picard_evenness(std::mt19937_64& rng, int trials) {
  CheckResult r{"picard_evenness", trials, 0.0, 0.0};
  for (int t = 0; t < trials; ++t) {
    const int n = 1 + t % 2, D = 8;
    const auto W = randseries::self_adjoint_part(randseries::random_even(rng, n, D, 5, 2, 0.05));
    const auto V = randseries::random_ball_element(rng, n, D, 3.0, 0.2);
    const auto tau = randseries::random_even_table(rng, n, D);
    r.worst = std::max(r.worst, picard_map(V, W, tau, D).odd_mass());
  }
  return r;
}

/// Largest ‖F(V₁) − F(V₂)‖_A / (bound·‖V₁ − V₂‖_A) over random pairs in the ball B_{A,R}.
inline CheckResult picard_contraction(std::mt19937_64& rng, int trials, double A = 3.0, double R = 0.25) {
  CheckResult r{"picard_contraction", trials, 0.0, 1.0};
  std::uniform_real_distribution<double> radius(0.0, R);
  for (int t = 0; t < trials; ++t) {
    const int n = 1 + t % 2, D = 8;
    const auto W = randseries::self_adjoint_part(randseries::random_even(rng, n, 4, 3, 2, 1e-4));
    const auto tau = solve_sd(W, default_trace_cap(n, D));
    const auto V1 = randseries::random_ball_element(rng, n, D, A, radius(rng));
    const auto V2 = randseries::random_ball_element(rng, n, D, A, radius(rng));
    const double ratio =
        norm_A(picard_map(V1, W, tau, D) - picard_map(V2, W, tau, D), A) / norm_A(V1 - V2, A);
    r.worst = std::max(r.worst, ratio / lipschitz_bound(W, A, R));
  }
  return r;
}

/// Semicircle moments against Catalan numbers from their recurrence.
inline CheckResult catalan_moments(int cap = 12) {
  CheckResult r{"catalan_moments", 1, 0.0, 1e-10};
  std::vector<double> c{1.0};
  for (int k = 1; 2 * k <= cap; ++k) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += c[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(k - 1 - i)];
    c.push_back(s);
  }
  const auto tau = solve_sd(NCSeries(1, cap), cap);
  for (int k = 0; k <= cap; ++k) {
    const double expect = k % 2 ? 0.0 : c[static_cast<std::size_t>(k / 2)];
    r.worst = std::max(r.worst, std::abs(tau(Word::power(0, k)) - expect));
  }
  return r;
}

/// Support radius of the free Gibbs law of x⁴/4 against 2·3^{−1/4}.
inline CheckResult quartic_radius() {
  CheckResult r{"quartic_radius", 1, 0.0, 1e-10};
  r.worst = std::abs(free_gibbs_measure(EvenPotential({0.0, 0.25})).radius - 2.0 / std::pow(3.0, 0.25));
  return r;
}

}  // namespace freemoment::checks
