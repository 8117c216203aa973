#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "freemoment/error.hpp"
#include "freemoment/measure1d.hpp"

namespace freemoment {

namespace moment_detail {
[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, "moment_measure_1d", msg);
}
}  // namespace moment_detail

/// Nondecreasing function given by samples, linearly interpolated and extended
/// by the end slopes.
struct MonotoneMap {
  std::vector<double> x;
  std::vector<double> y;

  double operator()(double t) const {
    if (x.empty()) return 0.0;
    if (x.size() == 1) return y.front();
    auto it = std::upper_bound(x.begin(), x.end(), t);
    std::size_t i = static_cast<std::size_t>(it - x.begin());
    i = std::clamp<std::size_t>(i, 1, x.size() - 1);
    const double x0 = x[i - 1], x1 = x[i];
    if (x1 == x0) return t < x0 ? y[i - 1] : y[i];
    return y[i - 1] + (y[i] - y[i - 1]) * (t - x0) / (x1 - x0);
  }

  bool nondecreasing() const {
    for (std::size_t i = 1; i < y.size(); ++i)
      if (y[i] < y[i - 1]) return false;
    return true;
  }
};

struct MomentProblem {
  GridMeasure target;
  std::size_t n_particles = 512;
  std::size_t max_iters = 50000;
  double step_size = 0.0;  // first trial step; 0 picks one from the gradient scale
  double tol = 1e-10;
  double grad_tol = 1e-6;
};

struct MomentResiduals {
  double hilbert = 0.0;         // max |2πHρ̂ − u′| on the interior
  double pushforward_w2 = 0.0;  // W₂((u′)#ρ̂, μ)
  double schwinger_dyson = 0.0; // |∫ x u′ dρ̂ − 1|
};

struct MomentSolution {
  GridMeasure rho_hat;
  std::vector<double> particles;
  MonotoneMap uprime;
  double functional_value = 0.0;
  MomentResiduals residuals;
  std::size_t iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;
  double target_barycenter = 0.0;
  std::vector<double> history;  // objective after each accepted step
};

/// L(ρ) + T(ρ, μ); +∞ for atomic ρ.
inline double functional_F(const GridMeasure& rho, const GridMeasure& mu) {
  if (rho.has_atoms()) return std::numeric_limits<double>::infinity();
  return log_energy(rho) + max_correlation(rho, mu);
}

/// Discrete objective −(1/m²)Σ_{j≠k} log|q_k − q_j| + (1/m)Σ q_k t_k for sorted
/// particles q and target quantiles t.
inline double particle_objective(const std::vector<double>& q, const std::vector<double>& t,
                                 double eps_sep = 0.0) {
  const std::size_t m = q.size();
  const double md = static_cast<double>(m);
  double pair = 0.0, lin = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    lin += q[k] * t[k];
    double row = 0.0;
    for (std::size_t j = k + 1; j < m; ++j) row += std::log(std::max(std::abs(q[j] - q[k]), eps_sep));
    pair += row;
  }
  return -2.0 * pair / (md * md) + lin / md;
}

inline std::vector<double> particle_gradient(const std::vector<double>& q, const std::vector<double>& t,
                                             double eps_sep = 0.0) {
  const std::size_t m = q.size();
  const double md = static_cast<double>(m);
  std::vector<double> g(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = k + 1; j < m; ++j) {
      double d = q[k] - q[j];
      if (std::abs(d) < eps_sep) d = d < 0 ? -eps_sep : eps_sep;
      const double inv = 1.0 / d;
      g[k] += inv;
      g[j] -= inv;
    }
  }
  for (std::size_t k = 0; k < m; ++k) g[k] = -2.0 * g[k] / (md * md) + t[k] / md;
  return g;
}

/// u′ = Q_μ ∘ F_ρ, sampled at the quantile grid of ρ.
inline MonotoneMap recover_potential_derivative(const GridMeasure& rho_hat, const GridMeasure& mu) {
  if (rho_hat.has_atoms())
    moment_detail::fail(ErrorCode::invalid_input, "rho_hat must be non-atomic");
  MonotoneMap map;
  map.x = rho_hat.quantiles();
  map.y = mu.quantiles();
  return map;
}

/// Residual report: Hilbert relation, pushforward distance and the scalar
/// Schwinger-Dyson identity.
inline MomentResiduals verify_moment_solution(const GridMeasure& rho_hat, const MonotoneMap& uprime,
                                              const GridMeasure& mu) {
  MomentResiduals res;
  const auto [a, b] = rho_hat.support();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  constexpr int kPoints = 201;
  for (int j = 0; j < kPoints; ++j) {
    const double x = c - 0.9 * h + 1.8 * h * j / (kPoints - 1);
    res.hilbert = std::max(res.hilbert,
                           std::abs(2.0 * std::numbers::pi * hilbert_transform(rho_hat, x) - uprime(x)));
  }
  const auto pushed = pushforward_monotone(rho_hat, [&](double x) { return uprime(x); });
  res.pushforward_w2 = std::sqrt(std::max(0.0, wasserstein2_sq(pushed, mu)));
  const double sd = expectation(rho_hat, [&](double x) { return x * uprime(x); }, uprime.x);
  res.schwinger_dyson = std::abs(sd - 1.0);
  return res;
}

inline MomentResiduals verify_solution(const MomentSolution& sol, const GridMeasure& mu) {
  return verify_moment_solution(sol.rho_hat, sol.uprime, mu.centered());
}

/// Minimizes ℱ(ρ) = L(ρ) + T(ρ, μ) over centered ρ with m equal-mass particles.
inline MomentSolution minimize_F(const MomentProblem& problem) {
  const std::size_t m = problem.n_particles;
  if (m < 4) moment_detail::fail(ErrorCode::invalid_input, "need at least four particles");
  const GridMeasure& mu = problem.target;
  const double bary = mu.mean();

  std::vector<double> t(m);
  double tmean = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    t[k] = mu.quantile((static_cast<double>(k) + 0.5) / static_cast<double>(m)) - bary;
    tmean += t[k];
  }
  tmean /= static_cast<double>(m);
  double spread = 0.0;
  for (auto& v : t) {
    v -= tmean;
    spread = std::max(spread, std::abs(v));
  }
  const auto [ta, tb] = mu.support();
  if (!(spread > 1e-12 * std::max(1.0, std::abs(ta) + std::abs(tb))))
    moment_detail::fail(ErrorCode::degenerate_target, "degenerate target: a point mass has no moment potential");

  const auto sc = GridMeasure::semicircle();
  std::vector<double> q(m);
  for (std::size_t k = 0; k < m; ++k) q[k] = sc.quantile((static_cast<double>(k) + 0.5) / static_cast<double>(m));

  auto eps_of = [](const std::vector<double>& v) { return 1e-9 * (v.back() - v.front()); };
  auto recenter = [](std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    s /= static_cast<double>(v.size());
    for (auto& x : v) x -= s;
  };
  auto inf_norm = [](const std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n = std::max(n, std::abs(x));
    return n;
  };

  MomentSolution sol;
  sol.target_barycenter = bary;
  double f = particle_objective(q, t, eps_of(q));
  auto g = particle_gradient(q, t, eps_of(q));
  sol.history.push_back(f);
  double step = problem.step_size > 0.0 ? problem.step_size
                                        : 0.1 / (static_cast<double>(m) * std::max(inf_norm(g), 1e-300)) *
                                              (q.back() - q.front()) / static_cast<double>(m);
  std::vector<double> prev_q, prev_g;
  std::size_t it = 0;
  bool done = false;
  for (; it < problem.max_iters && !done; ++it) {
    // Barzilai-Borwein trial step from the last accepted move.
    if (!prev_q.empty()) {
      double sy = 0.0, ss = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double s = q[k] - prev_q[k], y = g[k] - prev_g[k];
        sy += s * y;
        ss += s * s;
      }
      if (sy > 0.0 && ss > 0.0) step = ss / sy;
    }
    double gg = 0.0;
    for (double v : g) gg += v * v;
    std::vector<double> trial(m);
    double ft = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t k = 0; k < m; ++k) trial[k] = q[k] - step * g[k];
      std::sort(trial.begin(), trial.end());
      recenter(trial);
      bool distinct = true;
      for (std::size_t k = 1; k < m && distinct; ++k) distinct = trial[k] > trial[k - 1];
      if (distinct) {
        ft = particle_objective(trial, t, eps_of(trial));
        if (ft <= f - 1e-4 * step * gg) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) break;
    prev_q = q;
    prev_g = g;
    q = trial;
    const double f_old = f;
    f = ft;
    g = particle_gradient(q, t, eps_of(q));
    sol.history.push_back(f);
    const double rel = std::abs(f_old - f) / std::max(1.0, std::abs(f));
    if (rel < problem.tol && inf_norm(g) < problem.grad_tol) done = true;
  }
  sol.iterations = it;
  sol.converged = done;
  sol.grad_norm = inf_norm(g);
  sol.particles = q;
  sol.rho_hat = GridMeasure::from_particles(q).centered();
  const auto mu_c = mu.translated(-bary);
  sol.uprime = recover_potential_derivative(sol.rho_hat, mu_c);
  sol.functional_value = functional_F(sol.rho_hat, mu_c);
  sol.residuals = verify_moment_solution(sol.rho_hat, sol.uprime, mu_c);
  return sol;
}

}  // namespace freemoment
