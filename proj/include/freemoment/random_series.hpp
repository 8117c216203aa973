#pragma once

// Seeded random noncommutative series for property tests.

#include <random>
#include <vector>

#include "freemoment/nc_series.hpp"
#include "freemoment/trace_table.hpp"

namespace freemoment::randseries {

inline Word random_word(std::mt19937_64& rng, int n, int len) {
  std::uniform_int_distribution<int> letter(0, n - 1);
  Word w;
  for (int k = 0; k < len; ++k) w.push_back(letter(rng));
  return w;
}

/// `terms` random words of length lo..hi with coefficients in [−scale, scale].
inline NCSeries random_series(std::mt19937_64& rng, int n, int D, int terms, int lo = 0, int hi = -1,
                                          double scale = 1.0) {
  if (hi < 0) hi = D;
  std::uniform_int_distribution<int> len(lo, hi);
  std::uniform_real_distribution<double> coeff(-scale, scale);
  NCSeries f(n, D);
  for (int k = 0; k < terms; ++k) f.add_term(random_word(rng, n, len(rng)), coeff(rng));
  return f;
}

/// Random series containing only words of even length.
inline NCSeries random_even(std::mt19937_64& rng, int n, int D, int terms, int lo = 2,
                                        double scale = 1.0) {
  std::uniform_int_distribution<int> half(lo / 2, D / 2);
  std::uniform_real_distribution<double> coeff(-scale, scale);
  NCSeries f(n, D);
  for (int k = 0; k < terms; ++k) f.add_term(random_word(rng, n, 2 * half(rng)), coeff(rng));
  return f;
}

/// (f + f*)/2, where f* reverses every word.
inline NCSeries self_adjoint_part(const NCSeries& f) {
  NCSeries g(f.n_vars(), f.max_degree());
  for (const auto& [w, c] : f.terms()) {
    g.add_term(w, 0.5 * c);
    g.add_term(w.reversed(), 0.5 * c);
  }
  return g;
}

/// Random even trace table: values in [−1, 1] on even classes, zero on odd ones.
inline TraceTable random_even_table(std::mt19937_64& rng, int n, int cap) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TraceTable t(n, cap);
  for (std::size_t id = 1; id < t.class_count(); ++id)
    if (t.representative(id).size() % 2 == 0) t.set_value(id, u(rng));
  return t;
}

/// Even element of the range of 𝒮Π scaled to ‖·‖_A = r.
inline NCSeries random_ball_element(std::mt19937_64& rng, int n, int D, double A, double r) {
  NCSeries v = S(Pi(self_adjoint_part(random_even(rng, n, D, 6))));
  return v * (r / norm_A(v, A));
}

}  // namespace freemoment::randseries
