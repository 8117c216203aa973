#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "freemoment/free_gibbs_1d.hpp"
#include "freemoment/free_transport.hpp"
#include "oracles.hpp"
#include "freemoment/random_series.hpp"

using namespace freemoment;

namespace {

NCSeries quartic(int n, int D, double g) {
  NCSeries W(n, D);
  for (int i = 0; i < n; ++i) W.add_term(Word::power(i, 4), g);
  return W;
}

using randseries::random_ball_element;
using randseries::random_even_table;

}  // namespace

TEST(PicardMap, VanishesForZeroInputs) {
  const auto tau = semicircle_table(2, 8);
  EXPECT_TRUE(picard_map(NCSeries(2, 8), NCSeries(2, 8), tau, 8).is_zero());
}

TEST(PicardMap, ZeroVReturnsProjectedPotential) {
  std::mt19937_64 rng(2);
  const auto W = randseries::self_adjoint_part(randseries::random_even(rng, 2, 6, 5));
  const auto tau = random_even_table(rng, 2, 8);
  const auto F = picard_map(NCSeries(2, 8), W, tau, 8);
  EXPECT_LT((F + S(Pi(W))).max_abs_coeff(), 1e-15);
}

TEST(PicardMap, PreservesEvenness) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 2, D = 8;
    const auto W = randseries::self_adjoint_part(randseries::random_even(rng, n, D, 5, 2, 0.05));
    const auto V = random_ball_element(rng, n, D, 3.0, 0.2);
    const auto tau = random_even_table(rng, n, D);
    EXPECT_EQ(picard_map(V, W, tau, D).odd_mass(), 0.0);
  }
}

TEST(PicardMap, RequiresTraceCap) {
  EXPECT_THROW(picard_map(NCSeries(1, 8), NCSeries(1, 8), semicircle_table(1, 6), 8), Error);
  EXPECT_THROW(picard_map(NCSeries(1, 8), NCSeries(2, 8), semicircle_table(1, 8), 8), Error);
}

TEST(PicardMap, EmpiricalContraction) {
  const double A = 3.0, R = 0.25;
  std::mt19937_64 rng(44);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 2, D = 8;
    const auto W = randseries::self_adjoint_part(randseries::random_even(rng, n, 4, 3, 2, 1e-4));
    const auto tau = solve_sd(W, default_trace_cap(n, D));
    std::uniform_real_distribution<double> u(0.0, R);
    const auto V1 = random_ball_element(rng, n, D, A, u(rng));
    const auto V2 = random_ball_element(rng, n, D, A, u(rng));
    const double ratio =
        norm_A(picard_map(V1, W, tau, D) - picard_map(V2, W, tau, D), A) / norm_A(V1 - V2, A);
    const double bound = lipschitz_bound(W, A, R);
    EXPECT_LE(ratio, bound) << trial;
    worst = std::max(worst, ratio / bound);
  }
  RecordProperty("worst_ratio_over_bound", std::to_string(worst));
}

TEST(PicardMap, NormBound) {
  const double A = 3.0, R = 0.25, B = A + R;
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 2, D = 8;
    const auto W = randseries::self_adjoint_part(randseries::random_even(rng, n, 4, 3, 2, 1e-4));
    const auto tau = solve_sd(W, default_trace_cap(n, D));
    const auto V = random_ball_element(rng, n, D, A, R * (trial + 1) / 50.0);
    const double lhs = norm_A(picard_map(V, W, tau, D), A);
    EXPECT_LE(lhs, norm_A(W, B) + norm_A(V, A) * (0.5 + R + 4 * R / (A * A - 2 * R)));
  }
}

TEST(LipschitzBound, Examples) {
  EXPECT_NEAR(lipschitz_bound(NCSeries(2, 4), 3.0, 0.25), 59.0 / 68.0, 1e-15);
  EXPECT_NEAR(lipschitz_bound(NCSeries(1, 4), 1e6, 1e-12), 0.5, 1e-11);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto W = randseries::random_even(rng, 2, 6, 5);
    const double A = 3.0, R = 0.2;
    EXPECT_LE(lipschitz_bound(W, A, R), norm_A(W, A + R + 1) + 0.5 + R + 4 * R / (A * A - 2 * R) + 1e-12);
  }
  EXPECT_THROW(lipschitz_bound(NCSeries(1, 4), 1.0, 0.5), Error);
  EXPECT_THROW(lipschitz_bound(NCSeries(1, 4), 3.0, 0.0), Error);
}

TEST(SolveV, ZeroPotential) {
  TransportProblem p{NCSeries(2, 8)};
  const auto sol = solve_V(p);
  EXPECT_TRUE(sol.V.is_zero());
  EXPECT_EQ(sol.diagnostics.outer_iterations, 0);
  const auto rep = verify_transport(sol, p.W, 6);
  EXPECT_EQ(rep.deviation, 0.0);
  EXPECT_LT(rep.sd_residual, 1e-14);
}

TEST(SolveV, RejectsOddPotential) {
  NCSeries W = quartic(2, 8, 0.01);
  W.add_term(Word{0, 0, 0}, 0.01);
  try {
    solve_V(TransportProblem{W});
    FAIL() << "expected rejection";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_input);
    EXPECT_EQ(std::string(e.what()), "W must contain only terms of even degree");
  }
  EXPECT_THROW(solve_V(TransportProblem{NCSeries::monomial(2, 8, Word{0, 0, 0, 1})}), Error);
  TransportProblem low{quartic(1, 8, 0.01)};
  low.D = 1;
  EXPECT_THROW(solve_V(low), Error);
}

TEST(SolveV, SmallQuarticMatchesOneVariableOracle) {
  const double g = 0.005;
  TransportProblem p{quartic(1, 10, g)};
  p.D = 10;
  const auto sol = solve_V(p);
  EXPECT_TRUE(sol.V.is_even());
  EXPECT_LT((S(Pi(sol.V)) - sol.V).max_abs_coeff(), 1e-12);
  EXPECT_LT(sol.diagnostics.norm_V, 0.25);
  EXPECT_EQ(sol.diagnostics.within_ball, sol.diagnostics.norm_V <= p.R);
  const auto rep = verify_transport(sol, p.W, 6);
  const auto [m2, m4] = oracle::quartic_model_moments(g);
  EXPECT_NEAR(rep.tau_X(Word{0, 0}), m2, 1e-3);
  EXPECT_NEAR(rep.tau_X(Word{0, 0, 0, 0}), m4, 1e-3);
  const auto nu = free_gibbs_measure(EvenPotential({0.5, g})).measure;
  for (int k = 2; k <= 6; k += 2) EXPECT_NEAR(rep.tau_X(Word::power(0, k)), moment(nu, k), 1e-3) << k;
  EXPECT_LT(rep.deviation, 1e-3);
  EXPECT_LT(bracket_gradient_norm(sol, p.W, p.D, p.A), 1e-9);
}

TEST(SolveV, DeviationShrinksWithTruncationDegree) {
  double prev = 1.0;
  for (int D : {6, 8, 10, 12}) {
    TransportProblem p{quartic(1, D, 0.01)};
    p.D = D;
    const double dev = verify_transport(solve_V(p), p.W, 6).deviation;
    EXPECT_LT(dev, 0.5 * prev) << D;
    prev = dev;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(SolveV, TwoVariablesSmallCoupling) {
  NCSeries W = quartic(2, 8, 0.002);
  W.add_term(Word{0, 1, 0, 1}, 0.002);
  W = S(W);
  TransportProblem p{W};
  p.D = 8;
  const auto sol = solve_V(p);
  EXPECT_TRUE(sol.V.is_even());
  const auto rep = verify_transport(sol, W, 6);
  EXPECT_LT(rep.deviation, 1e-4);
  EXPECT_LT(rep.sd_residual, 1e-4);
  EXPECT_LT(bracket_gradient_norm(sol, W, p.D, p.A), 1e-9);
}

TEST(SolveV, GuaranteedRegimeFlag) {
  TransportProblem tiny{quartic(1, 8, 5e-5)};
  EXPECT_TRUE(solve_V(tiny).diagnostics.guaranteed_regime);
  TransportProblem large{quartic(1, 8, 0.01)};
  const auto d = solve_V(large).diagnostics;
  EXPECT_FALSE(d.guaranteed_regime);
  EXPECT_EQ(d.regime(), "unverified regime");
  EXPECT_NEAR(d.norm_W_C, 0.01 * std::pow(17.0 / 4.0, 4), 1e-12);
}

TEST(VerifyTransport, DetectsUnderResolvedV) {
  TransportProblem p{quartic(1, 10, 0.01)};
  p.D = 10;
  auto sol = solve_V(p);
  sol.V = sol.V.truncated(2);
  sol.transport_map = {NCSeries::variable(1, p.D, 0) + cyclic_gradient(sol.V, 0)};
  EXPECT_GE(verify_transport(sol, p.W, 6).deviation, 1e-2);
}
