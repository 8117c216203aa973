#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "freemoment/error.hpp"
#include "freemoment/nc_series.hpp"
#include "freemoment/sd_moments.hpp"
#include "freemoment/trace_table.hpp"

namespace freemoment {

namespace transport_detail {
[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, "free_transport", msg); }

inline double max_table_difference(const TraceTable& a, const TraceTable& b) {
  double d = 0.0;
  for (std::size_t id = 0; id < a.class_count(); ++id)
    d = std::max(d, std::abs(a.value(id) - b(a.representative(id))));
  return d;
}
}  // namespace transport_detail

struct TransportProblem {
  NCSeries W;
  double A = 3.0;
  double R = 0.24;
  int D = 8;
  int trace_cap = 0;  // 0 picks default_trace_cap(n, D)
  double cutoff = 3.0;
  double tol = 1e-12;
  int max_outer = 100;
  int max_inner = 500;
};

struct TransportDiagnostics {
  int outer_iterations = 0;
  int inner_iterations = 0;
  double final_update_norm = 0.0;
  double final_inner_update = 0.0;
  double tau_change = 0.0;  // max change between the last two trace tables
  double norm_V = 0.0;      // ‖V‖_A
  double norm_W_C = 0.0;    // ‖W‖_{17/4}
  bool guaranteed_regime = false;
  bool within_ball = false;  // ‖V‖_A ≤ R
  bool contraction_observed = true;
  std::vector<double> outer_updates;
  std::string regime() const { return guaranteed_regime ? "guaranteed" : "unverified regime"; }
};

struct TransportSolution {
  NCSeries V;
  NCSeries V_tilde;
  TraceTable tau_Y;
  std::vector<NCSeries> transport_map;
  TransportDiagnostics diagnostics;
};

inline void check_even_potential(const NCSeries& W) {
  if (!W.is_even()) transport_detail::fail(ErrorCode::invalid_input, "W must contain only terms of even degree");
  if (!W.is_self_adjoint(1e-12)) transport_detail::fail(ErrorCode::invalid_input, "W must be self-adjoint");
}

/// F(ΣṼ) = SΠ[−W(Y + 𝒟ΣṼ) + ΣṼ − |𝒟ΣṼ|²/2 + (1⊗τ + τ⊗1)Tr log(1 + J𝒟ΣṼ)], truncated at D.
inline NCSeries picard_map(const NCSeries& V_tilde, const NCSeries& W, const TraceTable& tau, int D) {
  const int n = V_tilde.n_vars();
  if (W.n_vars() != n) transport_detail::fail(ErrorCode::invalid_input, "W and V disagree on number of variables");
  if (tau.n_vars() != n) transport_detail::fail(ErrorCode::invalid_input, "trace table has the wrong number of variables");
  if (tau.degree_cap() < D) transport_detail::fail(ErrorCode::invalid_input, "trace degree cap is below the truncation degree");
  const NCSeries V = Sigma(Pi(V_tilde)).truncated(D);
  const auto g = cyclic_gradient(V);
  std::vector<NCSeries> args;
  NCSeries square(n, D);
  for (int i = 0; i < n; ++i) {
    args.push_back(NCSeries::variable(n, D, i) + g[static_cast<std::size_t>(i)]);
    square += multiply(g[static_cast<std::size_t>(i)], g[static_cast<std::size_t>(i)]);
  }
  NCSeries bracket = substitute(W, args, D) * -1.0;
  bracket += V;
  bracket -= square * 0.5;
  bracket += trace_contract(log_neumann(jacobian(g), std::max(D, 1)), tau);
  return S(Pi(bracket)).truncated(D);
}

/// Bracket W(Y+𝒟V) + (𝒩−1)V + |𝒟V|²/2 − (1⊗τ+τ⊗1)Tr log(1+J𝒟V), whose cyclic
/// gradient vanishes at a solution.
inline NCSeries transport_bracket(const NCSeries& V, const NCSeries& W, const TraceTable& tau, int D) {
  const int n = V.n_vars();
  const NCSeries Vd = V.truncated(D);
  const auto g = cyclic_gradient(Vd);
  std::vector<NCSeries> args;
  NCSeries square(n, D);
  for (int i = 0; i < n; ++i) {
    args.push_back(NCSeries::variable(n, D, i) + g[static_cast<std::size_t>(i)]);
    square += multiply(g[static_cast<std::size_t>(i)], g[static_cast<std::size_t>(i)]);
  }
  NCSeries b = substitute(W, args, D);
  b += N(Vd) - Vd;
  b += square * 0.5;
  b -= trace_contract(log_neumann(jacobian(g), std::max(D, 1)), tau);
  return b;
}

/// max_i ‖𝒟_i(bracket)‖_A at the solution.
inline double bracket_gradient_norm(const TransportSolution& sol, const NCSeries& W, int D, double A) {
  const auto b = transport_bracket(sol.V, W, sol.tau_Y, D);
  double worst = 0.0;
  for (const auto& gi : cyclic_gradient(b)) worst = std::max(worst, norm_A(gi, A));
  return worst;
}

/// ½ + ‖Σᵢ∂ᵢW‖_{B⊗B} + R + 4R/(A²−2R) with B = A + R.
inline double lipschitz_bound(const NCSeries& W, double A, double R) {
  if (!(A >= 1.0)) transport_detail::fail(ErrorCode::invalid_input, "norm radius A must be at least 1");
  if (!(R > 0.0)) transport_detail::fail(ErrorCode::invalid_input, "ball radius R must be positive");
  if (!(A * A > 2.0 * R)) transport_detail::fail(ErrorCode::invalid_input, "need A^2 > 2R");
  const double B = A + R;
  TensorSeries dW(W.n_vars(), W.max_degree());
  for (int i = 0; i < W.n_vars(); ++i) dW += difference_quotient(W, i);
  return 0.5 + norm_AB(dW, B, B) + R + 4.0 * R / (A * A - 2.0 * R);
}

/// Finds V with (Y + 𝒟V)#τ_{½|Y|²+V} = τ_{½|X|²+W}.
inline TransportSolution solve_V(const TransportProblem& p) {
  check_even_potential(p.W);
  if (p.D < 2) transport_detail::fail(ErrorCode::invalid_input, "truncation degree must be at least 2");
  if (!(p.A >= 1.0) || !(p.R > 0.0) || !(p.A * p.A > 2.0 * p.R))
    transport_detail::fail(ErrorCode::invalid_input, "need A >= 1, R > 0 and A^2 > 2R");
  const int n = p.W.n_vars();
  const NCSeries W = Pi(p.W);
  const int cap = p.trace_cap > 0 ? p.trace_cap : default_trace_cap(n, p.D);
  if (cap < p.D) transport_detail::fail(ErrorCode::invalid_input, "trace degree cap is below the truncation degree");

  TransportSolution sol;
  auto& diag = sol.diagnostics;
  diag.norm_W_C = norm_A(W, 17.0 / 4.0);
  diag.guaranteed_regime = diag.norm_W_C < 9.0 / 68.0 * p.R;

  NCSeries V(n, p.D);
  TraceTable tau = solve_sd(V, cap, p.cutoff);
  bool converged = W.is_zero();
  for (int outer = 1; outer <= p.max_outer && !converged; ++outer) {
    NCSeries Vt = S(Pi(N(V)));
    double prev = -1.0, upd = 0.0;
    int growth = 0;
    for (int inner = 1; inner <= p.max_inner; ++inner) {
      NCSeries next = picard_map(Vt, W, tau, p.D);
      upd = norm_A(next - Vt, p.A);
      Vt = std::move(next);
      ++diag.inner_iterations;
      if (prev >= 0.0 && upd > prev) {
        diag.contraction_observed = false;
        if (++growth >= 5) transport_detail::fail(ErrorCode::not_converged, "Picard iteration diverged");
      } else {
        growth = 0;
      }
      prev = upd;
      if (upd < p.tol) break;
    }
    diag.final_inner_update = upd;
    NCSeries next_V = Sigma(Vt);
    const double change = norm_A(next_V - V, p.A);
    V = std::move(next_V);
    TraceTable next_tau = solve_sd(V, cap, p.cutoff);
    diag.tau_change = transport_detail::max_table_difference(next_tau, tau);
    tau = std::move(next_tau);
    diag.outer_iterations = outer;
    diag.outer_updates.push_back(change);
    diag.final_update_norm = change;
    converged = change < p.tol;
  }
  if (!converged)
    transport_detail::fail(ErrorCode::not_converged,
                           "outer iteration did not converge in " + std::to_string(p.max_outer) + " steps");

  sol.V = V;
  sol.V_tilde = S(Pi(N(V)));
  sol.tau_Y = std::move(tau);
  for (int i = 0; i < n; ++i) sol.transport_map.push_back(NCSeries::variable(n, p.D, i) + cyclic_gradient(V, i));
  diag.norm_V = norm_A(V, p.A);
  diag.within_ball = diag.norm_V <= p.R;
  return sol;
}

struct TransportReport {
  double deviation = 0.0;    // max word-wise |τ_X − τ_direct| up to degree D
  double sd_residual = 0.0;  // sd_residual(τ_X, W, D)
  TraceTable tau_X;
  TraceTable tau_direct;
};

/// Pushes τ_Y through Y + 𝒟V and compares with the Schwinger-Dyson solution for W.
inline TransportReport verify_transport(const TransportSolution& sol, const NCSeries& W, int D) {
  TransportReport r;
  r.tau_X = pushforward_trace(sol.tau_Y, sol.transport_map, D);
  r.tau_direct = solve_sd(Pi(W), sol.tau_Y.degree_cap(), sol.tau_Y.cutoff()).restricted(D);
  r.deviation = transport_detail::max_table_difference(r.tau_X, r.tau_direct);
  r.sd_residual = sd_residual(r.tau_X, W, D);
  return r;
}

}  // namespace freemoment
