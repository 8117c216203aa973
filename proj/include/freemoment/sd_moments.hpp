#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "freemoment/error.hpp"
#include "freemoment/nc_series.hpp"
#include "freemoment/trace_table.hpp"
#include "freemoment/word.hpp"

namespace freemoment {

namespace sd_detail {
[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, "sd_moments", msg); }

/// Highest word length among the components of 𝒟W; 0 when W has no nonconstant terms.
inline int gradient_degree(const std::vector<NCSeries>& dW) {
  int d = 0;
  for (const auto& s : dW) d = std::max(d, s.degree());
  return d;
}

inline void check_potential(const NCSeries& W, int n) {
  if (W.n_vars() != n) fail(ErrorCode::invalid_input, "potential and trace table disagree on number of variables");
  if (!W.is_self_adjoint(1e-12)) fail(ErrorCode::invalid_input, "potential must be self-adjoint");
}

/// For the class with representative x_i·w: τ(x_i w) = Σ τ(w_<k) τ(w_>k) − Σ c τ(w v),
/// over positions k with w_k = i and terms c·v of 𝒟_iW.
struct Equation {
  std::size_t id = 0;
  int length = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::pair<double, std::size_t>> drift;
  double dropped = 0.0;  // Σ |c| T^{|wv|} over terms beyond the cap
};

inline std::vector<Equation> compile(const TraceTable& t, const std::vector<NCSeries>& dW) {
  std::vector<Equation> eqs;
  const int cap = t.degree_cap();
  for (int L = 1; L <= cap; ++L) {
    for (std::size_t id : t.classes_of_length(L)) {
      const Word& u = t.representative(id);
      const int i = u[0];
      const Word w = u.suffix_from(1);
      Equation e;
      e.id = id;
      e.length = L;
      for (int k = 0; k < w.size(); ++k)
        if (w[k] == i) e.pairs.emplace_back(t.class_of(w.prefix(k)), t.class_of(w.suffix_from(k + 1)));
      if (!dW.empty()) {
        for (const auto& [v, c] : dW[static_cast<std::size_t>(i)].terms()) {
          if (w.size() + v.size() <= cap)
            e.drift.emplace_back(c, t.class_of(w + v));
          else
            e.dropped += std::abs(c) * std::pow(t.cutoff(), w.size() + v.size());
        }
      }
      eqs.push_back(std::move(e));
    }
  }
  return eqs;
}

inline double evaluate(const Equation& e, const std::vector<double>& v) {
  double acc = 0.0;
  for (const auto& [a, b] : e.pairs) acc += v[a] * v[b];
  for (const auto& [c, id] : e.drift) acc -= c * v[id];
  return acc;
}

}  // namespace sd_detail

struct SDOptions {
  double cutoff = 3.0;
  double tol = 1e-12;
  double damping = 0.5;
  int max_sweeps = 20000;
};

struct SDResult {
  TraceTable table;
  int sweeps = 0;
  double last_change = 0.0;
  double tail_estimate = 0.0;  // largest Σ|c|T^{|wv|} over terms dropped at the cap
};

/// Moments of the free semicircular family (W = 0), exact up to rounding.
inline TraceTable semicircle_table(int n, int cap, double cutoff = 3.0) {
  TraceTable t(n, cap, cutoff);
  const auto eqs = sd_detail::compile(t, {});
  std::vector<double> v = t.values();
  for (const auto& e : eqs) v[e.id] = sd_detail::evaluate(e, v);
  for (std::size_t id = 0; id < v.size(); ++id) t.set_value(id, v[id]);
  return t;
}

/// Trace table of the free Gibbs law with potential ½|X|² + W, words up to length D.
/// Sweeps stop when every value changes by less than tol·max(1, |value|).
inline SDResult solve_sd_detailed(const NCSeries& W, int D, const SDOptions& opt = {}) {
  if (!(opt.cutoff > 2.0)) sd_detail::fail(ErrorCode::invalid_input, "cutoff must exceed 2");
  if (!(opt.damping > 0.0 && opt.damping <= 1.0)) sd_detail::fail(ErrorCode::invalid_input, "damping must be in (0, 1]");
  const int n = W.n_vars();
  sd_detail::check_potential(W, n);
  SDResult res;
  res.table = semicircle_table(n, D, opt.cutoff);
  const auto dW = cyclic_gradient(W);
  const auto eqs = sd_detail::compile(res.table, dW);
  for (const auto& e : eqs) res.tail_estimate = std::max(res.tail_estimate, e.dropped);

  std::vector<double> v = res.table.values();
  std::vector<double> bound(static_cast<std::size_t>(D) + 1);
  for (int L = 0; L <= D; ++L) bound[static_cast<std::size_t>(L)] = std::pow(opt.cutoff, L);

  bool converged = W.is_zero();
  bool clamped = false;
  for (int sweep = 1; sweep <= opt.max_sweeps && !converged; ++sweep) {
    double change = 0.0;
    clamped = false;
    for (const auto& e : eqs) {
      const double b = bound[static_cast<std::size_t>(e.length)];
      const double old = v[e.id];
      double next = (1.0 - opt.damping) * old + opt.damping * sd_detail::evaluate(e, v);
      if (!std::isfinite(next)) sd_detail::fail(ErrorCode::regime_violation, "outside perturbative regime: moments diverged");
      if (std::abs(next) > b) {
        next = std::copysign(b, next);
        clamped = true;
      }
      change = std::max(change, std::abs(next - old) / std::max(1.0, std::abs(next)));
      v[e.id] = next;
    }
    res.sweeps = sweep;
    res.last_change = change;
    converged = change < opt.tol;
  }
  if (clamped)
    sd_detail::fail(ErrorCode::regime_violation, "outside perturbative regime: moments exceed the cutoff bound");
  if (!converged)
    sd_detail::fail(ErrorCode::not_converged,
                    "Schwinger-Dyson iteration did not converge in " + std::to_string(opt.max_sweeps) + " sweeps");
  for (std::size_t id = 0; id < v.size(); ++id) res.table.set_value(id, v[id]);
  return res;
}

inline TraceTable solve_sd(const NCSeries& W, int D, double T = 3.0, double tol = 1e-12) {
  SDOptions opt;
  opt.cutoff = T;
  opt.tol = tol;
  return solve_sd_detailed(W, D, opt).table;
}

/// max over words P with |P| ≤ D − 1 − deg(𝒟W) and i of
/// |τ(P·(x_i + 𝒟_iW)) − Σ_{k: P_k = i} τ(P_<k) τ(P_>k)|.
inline double sd_residual(const TraceTable& tau, const NCSeries& W, int D) {
  const int n = tau.n_vars();
  if (W.n_vars() != n) sd_detail::fail(ErrorCode::invalid_input, "potential and trace table disagree on number of variables");
  if (D > tau.degree_cap()) sd_detail::fail(ErrorCode::invalid_input, "residual degree exceeds the trace degree cap");
  const auto dW = cyclic_gradient(W);
  const int Lmax = D - 1 - sd_detail::gradient_degree(dW);
  double worst = 0.0;
  std::vector<Word> level{Word{}};
  for (int L = 0; L <= Lmax; ++L) {
    for (const Word& P : level) {
      for (int i = 0; i < n; ++i) {
        double lhs = tau(P + Word::letter(i));
        for (const auto& [v, c] : dW[static_cast<std::size_t>(i)].terms()) lhs += c * tau(P + v);
        double rhs = 0.0;
        for (int k = 0; k < P.size(); ++k)
          if (P[k] == i) rhs += tau(P.prefix(k)) * tau(P.suffix_from(k + 1));
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    }
    std::vector<Word> next;
    for (const Word& P : level)
      for (int i = 0; i < n; ++i) next.push_back(P + Word::letter(i));
    level = std::move(next);
  }
  return worst;
}

/// Trace table of X = f(Y) for Y with law tau, on words of length ≤ D_out. Expansions
/// are truncated at the cap of tau; with strict set, D_out·deg f must fit under the cap.
inline TraceTable pushforward_trace(const TraceTable& tau, const std::vector<NCSeries>& f, int D_out,
                                    bool strict = false) {
  const int n = tau.n_vars();
  if (f.empty() || static_cast<int>(f.size()) > Word::kMaxVars)
    sd_detail::fail(ErrorCode::invalid_input, "map must have 1..4 components");
  int deg = 0;
  for (const auto& c : f) {
    if (c.n_vars() != n) sd_detail::fail(ErrorCode::invalid_input, "map components disagree with the trace table");
    if (c.constant_term() != 0.0) sd_detail::fail(ErrorCode::invalid_input, "map components must have zero constant term");
    deg = std::max(deg, c.degree());
  }
  const int cap = tau.degree_cap();
  if (D_out > cap) sd_detail::fail(ErrorCode::invalid_input, "output degree exceeds the trace degree cap");
  if (strict && D_out * deg > cap)
    sd_detail::fail(ErrorCode::invalid_input, "trace degree cap too small for an exact pushforward");
  std::vector<NCSeries> fc;
  for (const auto& c : f) fc.push_back(c.truncated(cap));

  TraceTable out(static_cast<int>(f.size()), D_out, tau.cutoff());
  std::unordered_map<Word, NCSeries, WordHash> prefix;
  prefix.emplace(Word{}, NCSeries::constant(n, cap, 1.0));
  for (std::size_t id = 1; id < out.class_count(); ++id) {
    const Word& w = out.representative(id);
    for (int k = 1; k <= w.size(); ++k) {
      const Word p = w.prefix(k);
      if (prefix.count(p)) continue;
      prefix.emplace(p, multiply(prefix.at(w.prefix(k - 1)), fc[static_cast<std::size_t>(w[k - 1])]));
    }
    double v = 0.0;
    for (const auto& [word, c] : prefix.at(w).terms()) v += c * tau(word);
    out.set_value(id, v);
  }
  return out;
}

/// Default trace degree cap: the largest length whose raw word count stays near 2^17,
/// capped at 40 and at least D.
inline int default_trace_cap(int n, int D) {
  int cap = 40;
  if (n > 1) {
    std::size_t total = 0, count = 1;
    int L = 0;
    while (true) {
      total += count;
      if (total > (std::size_t{1} << 17)) break;
      count *= static_cast<std::size_t>(n);
      ++L;
    }
    cap = std::min(cap, L - 1);
  }
  return std::max(cap, D);
}

}  // namespace freemoment
