#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "freemoment/error.hpp"
#include "freemoment/measure1d.hpp"

namespace freemoment {

namespace gibbs_detail {
[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, "free_gibbs_1d", msg);
}
}  // namespace gibbs_detail

/// u(x) = Σ_k c_{2k} x^{2k}, stored as (c₂, c₄, …).
class EvenPotential {
 public:
  EvenPotential() = default;

  explicit EvenPotential(std::vector<double> even_coeffs) : c_(std::move(even_coeffs)) {
    while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
    if (c_.empty()) gibbs_detail::fail(ErrorCode::invalid_input, "potential has no terms");
    for (double v : c_)
      if (!std::isfinite(v)) gibbs_detail::fail(ErrorCode::invalid_input, "coefficients must be finite");
    if (!(c_.back() > 0.0))
      gibbs_detail::fail(ErrorCode::invalid_input, "leading coefficient must be positive");
  }

  /// From ordinary coefficients a₀, a₁, …, a_d; odd terms are rejected and a₀ dropped.
  static EvenPotential from_polynomial(const std::vector<double>& a) {
    std::vector<double> even;
    for (std::size_t k = 1; k < a.size(); ++k) {
      if (k % 2 == 1) {
        if (a[k] != 0.0) gibbs_detail::fail(ErrorCode::invalid_input, "potential must be even");
      } else {
        even.push_back(a[k]);
      }
    }
    return EvenPotential(even);
  }

  /// Parses "c2,c4,...".
  static EvenPotential parse(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(item, &used));
        if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
      } catch (const std::logic_error&) {
        gibbs_detail::fail(ErrorCode::invalid_input, "cannot parse coefficient '" + item + "'");
      }
    }
    return EvenPotential(v);
  }

  const std::vector<double>& coeffs() const { return c_; }
  int degree() const { return 2 * static_cast<int>(c_.size()); }

  double operator()(double x) const {
    const double x2 = x * x;
    double acc = 0.0;
    for (std::size_t k = c_.size(); k-- > 0;) acc = acc * x2 + c_[k];
    return acc * x2;
  }

  double derivative(double x) const {
    const double x2 = x * x;
    double acc = 0.0;
    for (std::size_t k = c_.size(); k-- > 0;) acc = acc * x2 + 2.0 * static_cast<double>(k + 1) * c_[k];
    return acc * x;
  }

  /// v(x) = u(c x).
  EvenPotential dilated(double c) const {
    auto d = c_;
    double p = c * c;
    for (auto& v : d) {
      v *= p;
      p *= c * c;
    }
    return EvenPotential(d);
  }

 private:
  std::vector<double> c_;
};

/// a₀..a_N of F with Re F(e^{iθ}) = ½u′(−r cos θ), by the periodic trapezoid rule
/// on 4(N+1) points.
inline std::vector<double> fourier_coefficients(const std::function<double(double)>& uprime, double r,
                                                int N) {
  if (N < 1) gibbs_detail::fail(ErrorCode::invalid_input, "need N >= 1");
  if (!(r > 0.0)) gibbs_detail::fail(ErrorCode::invalid_input, "radius must be positive");
  const int M = 4 * (N + 1);
  std::vector<double> vals(M), theta(M);
  for (int j = 0; j < M; ++j) {
    theta[j] = 2.0 * std::numbers::pi * j / M;
    vals[j] = uprime(-r * std::cos(theta[j]));
  }
  std::vector<double> a(N + 1, 0.0);
  for (int n = 0; n <= N; ++n) {
    double acc = 0.0;
    for (int j = 0; j < M; ++j) acc += vals[j] * std::cos(n * theta[j]);
    a[n] = (n == 0 ? 0.5 : 1.0) * acc / M;
  }
  return a;
}

/// Positive r with r·a₁(r) = −2.
inline double solve_radius(const EvenPotential& u) {
  const int N = std::max(1, u.degree() - 1);
  auto uprime = [&u](double x) { return u.derivative(x); };
  auto g = [&](double r) { return r * fourier_coefficients(uprime, r, N)[1] + 2.0; };
  // r·a₁ = −Σ 2k c₂ₖ binom(2k,k)/4^k r^{2k}, used for the Newton slope.
  std::vector<double> beta;
  {
    double central = 1.0;  // binom(2k,k)/4^k
    for (std::size_t k = 1; k <= u.coeffs().size(); ++k) {
      central *= (2.0 * k - 1.0) / (2.0 * k);
      beta.push_back(2.0 * k * u.coeffs()[k - 1] * central);
    }
  }
  auto slope = [&](double r) {
    double acc = 0.0;
    for (std::size_t k = 1; k <= beta.size(); ++k)
      acc -= 2.0 * k * beta[k - 1] * std::pow(r, 2.0 * k - 1.0);
    return acc;
  };

  double lo = 1e-6, hi = 1e6;
  double glo = g(lo), ghi = g(hi);
  if (!(glo > 0.0) || !(ghi < 0.0))
    gibbs_detail::fail(ErrorCode::no_admissible_radius, "no admissible radius in [1e-6, 1e6]");
  // Bisect in log r first, which resolves the wide bracket quickly.
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double gm = g(mid);
    if (gm > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-15 * hi) break;
  }
  double r = 0.5 * (lo + hi);
  for (int it = 0; it < 10; ++it) {
    const double s = slope(r);
    if (s == 0.0) break;
    const double step = g(r) / s;
    const double next = r - step;
    if (!(next > 0.0) || !std::isfinite(next)) break;
    r = next;
    if (std::abs(step) <= 1e-16 * r) break;
  }
  return r;
}

struct GibbsSolution {
  double radius = 0.0;
  std::vector<double> fourier;
  GridMeasure measure;
};

namespace gibbs_detail {

inline double raw_density(const std::vector<double>& a, double r, double x) {
  const double theta = std::acos(std::clamp(-x / r, -1.0, 1.0));
  double acc = 0.0;
  for (std::size_t n = 1; n < a.size(); ++n) acc += a[n] * std::sin(static_cast<double>(n) * theta);
  return -acc / std::numbers::pi;
}

inline double exact_cdf(const std::vector<double>& a, double r, double x) {
  const double theta = std::acos(std::clamp(-x / r, -1.0, 1.0));
  double acc = 0.0;
  for (std::size_t n = 1; n < a.size(); ++n) {
    const double nn = static_cast<double>(n);
    const double In = n == 1 ? 0.5 * theta - 0.25 * std::sin(2.0 * theta)
                             : 0.5 * (std::sin((nn - 1.0) * theta) / (nn - 1.0) -
                                      std::sin((nn + 1.0) * theta) / (nn + 1.0));
    acc += a[n] * In;
  }
  return -r * acc / std::numbers::pi;
}

}  // namespace gibbs_detail

/// −(1/π) Σ aₙ sin(nθ) at x = −r cos θ; round-off negatives above −1e-12 clip to 0.
inline double gibbs_density(const GibbsSolution& sol, double x) {
  if (!(std::abs(x) < sol.radius))
    gibbs_detail::fail(ErrorCode::out_of_domain, "density evaluated outside (-r, r)");
  const double v = gibbs_detail::raw_density(sol.fourier, sol.radius, x);
  return v >= -1e-12 ? std::max(v, 0.0) : v;
}

/// Cumulative distribution of the solution, integrated term by term.
inline double gibbs_cdf(const GibbsSolution& sol, double x) {
  if (x <= -sol.radius) return 0.0;
  if (x >= sol.radius) return 1.0;
  return gibbs_detail::exact_cdf(sol.fourier, sol.radius, x);
}

/// Free Gibbs measure of an even one-cut potential.
inline GibbsSolution free_gibbs_measure(const EvenPotential& u,
                                        std::size_t nodes = GridMeasure::kDefaultNodes) {
  GibbsSolution sol;
  sol.radius = solve_radius(u);
  const int N = std::max(1, u.degree() - 1);
  sol.fourier = fourier_coefficients([&u](double x) { return u.derivative(x); }, sol.radius, N);
  const double r = sol.radius;
  const auto& a = sol.fourier;

  // Scan densely for negative density; the grid nodes alone could miss a dip.
  const std::size_t scan = std::max<std::size_t>(4 * nodes, 4096);
  for (std::size_t j = 1; j < scan; ++j) {
    const double theta = std::numbers::pi * static_cast<double>(j) / static_cast<double>(scan);
    const double v = gibbs_detail::raw_density(a, r, -r * std::cos(theta));
    if (v < -1e-9)
      gibbs_detail::fail(ErrorCode::one_cut_violated,
                         "one-cut assumption violated: negative density for this potential");
  }
  const double mass = gibbs_detail::exact_cdf(a, r, r);
  if (std::abs(mass - 1.0) > 1e-8)
    gibbs_detail::fail(ErrorCode::internal, "assembled density does not have unit mass");

  sol.measure = GridMeasure::from_density(
      -r, r, [&](double x) { return std::max(0.0, gibbs_detail::raw_density(a, r, x)); }, nodes,
      [&](double x) { return gibbs_detail::exact_cdf(a, r, x); });
  return sol;
}

/// max_{|x| ≤ 0.9r} |2π H(ν)(x) − u′(x)| over 201 evenly spaced points.
inline double hilbert_residual_measure(const GridMeasure& nu, double r,
                                       const std::function<double(double)>& uprime) {
  double worst = 0.0;
  constexpr int kPoints = 201;
  for (int j = 0; j < kPoints; ++j) {
    const double x = -0.9 * r + 1.8 * r * j / (kPoints - 1);
    worst = std::max(worst, std::abs(2.0 * std::numbers::pi * hilbert_transform(nu, x) - uprime(x)));
  }
  return worst;
}

inline double hilbert_residual(const GibbsSolution& sol, const EvenPotential& u) {
  return hilbert_residual_measure(sol.measure, sol.radius, [&u](double x) { return u.derivative(x); });
}

}  // namespace freemoment
