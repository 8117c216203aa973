#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iterator>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "freemoment/error.hpp"

namespace freemoment {

namespace detail {

inline constexpr std::array<double, 4> kGL4x{-0.8611363115940526, -0.3399810435848563,
                                             0.3399810435848563, 0.8611363115940526};
inline constexpr std::array<double, 4> kGL4w{0.3478548451374538, 0.6521451548625461,
                                             0.6521451548625461, 0.3478548451374538};
inline constexpr std::array<double, 5> kGL5x{-0.9061798459386640, -0.5384693101056831, 0.0,
                                             0.5384693101056831, 0.9061798459386640};
inline constexpr std::array<double, 5> kGL5w{0.2369268850561891, 0.4786286704993665,
                                             0.5688888888888889, 0.4786286704993665,
                                             0.2369268850561891};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, "measure1d", msg);
}

}  // namespace detail

/// One piece of a measure: a cell [x0,x1] carrying `mass` with a density that is
/// linear between r0 and r1, or an atom when x0 == x1.
struct Piece {
  double x0 = 0.0;
  double x1 = 0.0;
  double mass = 0.0;
  double r0 = 0.0;
  double r1 = 0.0;

  bool is_atom() const { return x1 == x0; }

  // Fraction of the cell mass below x0 + t*(x1-x0).
  double fraction(double t) const {
    if (is_atom()) return t >= 0.0 ? 1.0 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double sum = r0 + r1;
    if (!(sum > 0.0)) return t;
    return (r0 * t + 0.5 * (r1 - r0) * t * t) / (0.5 * sum);
  }

  // Inverse of fraction(): relative position t in [0,1].
  double position(double phi) const {
    phi = std::clamp(phi, 0.0, 1.0);
    const double sum = r0 + r1;
    if (!(sum > 0.0)) return phi;
    const double disc = std::sqrt((1.0 - phi) * r0 * r0 + phi * r1 * r1);
    const double den = r0 + disc;
    if (!(den > 0.0)) return 0.0;
    return std::clamp(phi * sum / den, 0.0, 1.0);
  }

  double locate(double phi) const { return x0 + (x1 - x0) * position(phi); }
};

/// Compactly supported probability measure on the line, stored as ordered pieces
/// (linear-density cells and atoms) with a cached quantile table.
class GridMeasure {
 public:
  static constexpr std::size_t kQuantileGrid = 1024;
  static constexpr std::size_t kDefaultNodes = 2048;

  GridMeasure() = default;

  /// Builds from pieces; zero-mass pieces are dropped and the rest sorted.
  static GridMeasure from_pieces(std::vector<Piece> pieces, bool normalize = false) {
    GridMeasure m;
    double total = 0.0;
    for (const auto& p : pieces) {
      if (!std::isfinite(p.x0) || !std::isfinite(p.x1) || p.x1 < p.x0)
        detail::fail(ErrorCode::invalid_input, "piece endpoints must be finite and ordered");
      if (!(p.mass >= 0.0) || !std::isfinite(p.mass))
        detail::fail(ErrorCode::invalid_input, "piece mass must be nonnegative");
      if (!(p.r0 >= 0.0) || !(p.r1 >= 0.0) || !std::isfinite(p.r0) || !std::isfinite(p.r1))
        detail::fail(ErrorCode::invalid_input, "density must be finite and nonnegative");
      total += p.mass;
    }
    if (!(total > 0.0)) detail::fail(ErrorCode::invalid_input, "measure has zero mass");
    if (!normalize && std::abs(total - 1.0) > 1e-6)
      detail::fail(ErrorCode::invalid_input, "total mass must be 1");
    std::vector<Piece> kept;
    kept.reserve(pieces.size());
    for (auto p : pieces) {
      if (p.mass <= 0.0) continue;
      if (normalize) p.mass /= total;
      if (p.is_atom()) p.r0 = p.r1 = 0.0;
      kept.push_back(p);
    }
    std::stable_sort(kept.begin(), kept.end(), [](const Piece& a, const Piece& b) {
      return a.x0 < b.x0 || (a.x0 == b.x0 && a.x1 < b.x1);
    });
    for (std::size_t i = 1; i < kept.size(); ++i) {
      if (kept[i].x0 < kept[i - 1].x1)
        detail::fail(ErrorCode::invalid_input, "pieces overlap");
    }
    // Merge atoms sharing a location.
    std::vector<Piece> merged;
    for (const auto& p : kept) {
      if (!merged.empty() && p.is_atom() && merged.back().is_atom() && merged.back().x0 == p.x0)
        merged.back().mass += p.mass;
      else
        merged.push_back(p);
    }
    m.pieces_ = std::move(merged);
    m.finalize();
    return m;
  }

  /// Density samples on increasing nodes. Cell masses come from `cdf` when given,
  /// otherwise from the trapezoid rule.
  static GridMeasure from_samples(const std::vector<double>& nodes,
                                  const std::vector<double>& density,
                                  const std::vector<double>& cdf = {}, bool normalize = false,
                                  const std::vector<std::pair<double, double>>& atoms = {}) {
    if (nodes.size() < 2 || density.size() != nodes.size())
      detail::fail(ErrorCode::invalid_input, "need at least two nodes with matching density");
    if (!cdf.empty() && cdf.size() != nodes.size())
      detail::fail(ErrorCode::invalid_input, "cdf length must match nodes");
    std::vector<Piece> pieces;
    pieces.reserve(nodes.size() + atoms.size());
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      if (!(nodes[i + 1] > nodes[i]))
        detail::fail(ErrorCode::invalid_input, "nodes must be strictly increasing");
      Piece p{nodes[i], nodes[i + 1], 0.0, density[i], density[i + 1]};
      if (!(p.r0 >= 0.0) || !(p.r1 >= 0.0))
        detail::fail(ErrorCode::invalid_input, "density must be nonnegative");
      p.mass = cdf.empty() ? 0.5 * (p.x1 - p.x0) * (p.r0 + p.r1)
                           : std::max(0.0, cdf[i + 1] - cdf[i]);
      if (p.mass <= 0.0) p.r0 = p.r1 = 0.0;
      pieces.push_back(p);
    }
    for (const auto& [x, w] : atoms) {
      for (const auto& p : pieces) {
        if (x > p.x0 && x < p.x1 && p.mass > 0.0)
          detail::fail(ErrorCode::invalid_input, "atoms must sit at nodes or outside the cells");
      }
      pieces.push_back(Piece{x, x, w, 0.0, 0.0});
    }
    return from_pieces(std::move(pieces), normalize);
  }

  /// Density sampled on Chebyshev-Lobatto nodes of [a,b].
  static GridMeasure from_density(double a, double b, const std::function<double(double)>& rho,
                                  std::size_t n = kDefaultNodes,
                                  const std::function<double(double)>& cdf = {},
                                  bool normalize = false) {
    if (!(b > a)) detail::fail(ErrorCode::invalid_input, "support must satisfy a < b");
    if (n < 3) detail::fail(ErrorCode::invalid_input, "need at least three nodes");
    const auto nodes = chebyshev_nodes(a, b, n);
    std::vector<double> dens(n), c;
    for (std::size_t j = 0; j < n; ++j) dens[j] = std::max(0.0, rho(nodes[j]));
    if (cdf) {
      c.resize(n);
      for (std::size_t j = 0; j < n; ++j) c[j] = cdf(nodes[j]);
      c.front() = 0.0;
    }
    return from_samples(nodes, dens, c, normalize);
  }

  static GridMeasure from_atoms(const std::vector<std::pair<double, double>>& atoms) {
    if (atoms.empty()) detail::fail(ErrorCode::invalid_input, "no atoms given");
    std::vector<Piece> pieces;
    for (const auto& [x, w] : atoms) {
      if (!std::isfinite(x)) detail::fail(ErrorCode::invalid_input, "atom location must be finite");
      pieces.push_back(Piece{x, x, w, 0.0, 0.0});
    }
    return from_pieces(std::move(pieces));
  }

  /// Equal-mass particles q_k placed at levels (k+1/2)/m of the cdf.
  static GridMeasure from_particles(std::vector<double> q) {
    const std::size_t m = q.size();
    if (m < 2) detail::fail(ErrorCode::invalid_input, "need at least two particles");
    std::sort(q.begin(), q.end());
    for (std::size_t k = 0; k + 1 < m; ++k) {
      if (!(q[k + 1] > q[k])) detail::fail(ErrorCode::invalid_input, "particles must be distinct");
    }
    const double w = 1.0 / static_cast<double>(m);
    std::vector<double> nodes(m + 2), dens(m + 2, 0.0), cdf(m + 2);
    nodes[0] = q[0] - (q[1] - q[0]);
    nodes[m + 1] = q[m - 1] + (q[m - 1] - q[m - 2]);
    cdf[0] = 0.0;
    cdf[m + 1] = 1.0;
    for (std::size_t k = 0; k < m; ++k) {
      nodes[k + 1] = q[k];
      cdf[k + 1] = (static_cast<double>(k) + 0.5) * w;
      const double lo = k == 0 ? nodes[0] : q[k - 1];
      const double hi = k + 1 == m ? nodes[m + 1] : q[k + 1];
      dens[k + 1] = 2.0 * w / (hi - lo);
    }
    return from_samples(nodes, dens, cdf);
  }

  static GridMeasure uniform(double a, double b) {
    return from_samples({a, b}, {1.0 / (b - a), 1.0 / (b - a)});
  }

  /// Semicircle law of variance sigma^2, supported on [-2 sigma, 2 sigma].
  static GridMeasure semicircle(double sigma = 1.0, std::size_t n = kDefaultNodes) {
    const double r = 2.0 * sigma;
    auto rho = [r](double x) {
      const double v = r * r - x * x;
      return v > 0.0 ? 2.0 * std::sqrt(v) / (std::numbers::pi * r * r) : 0.0;
    };
    auto cdf = [r](double x) {
      const double u = std::clamp(x / r, -1.0, 1.0);
      return 0.5 + (u * std::sqrt(1.0 - u * u) + std::asin(u)) / std::numbers::pi;
    };
    return from_density(-r, r, rho, n, cdf);
  }

  static std::vector<double> chebyshev_nodes(double a, double b, std::size_t n) {
    std::vector<double> x(n);
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const double d = static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      const double arg = std::numbers::pi * (2.0 * static_cast<double>(j) - d) / (2.0 * d);
      x[j] = c + h * std::sin(arg);
    }
    x.front() = a;
    x.back() = b;
    return x;
  }

  const std::vector<Piece>& pieces() const { return pieces_; }
  const std::vector<double>& quantiles() const { return quantiles_; }
  std::pair<double, double> support() const { return {pieces_.front().x0, pieces_.back().x1}; }

  bool has_atoms() const {
    return std::any_of(pieces_.begin(), pieces_.end(), [](const Piece& p) { return p.is_atom(); });
  }
  bool has_density() const {
    return std::any_of(pieces_.begin(), pieces_.end(), [](const Piece& p) { return !p.is_atom(); });
  }
  bool mixed() const { return has_atoms() && has_density(); }

  std::vector<std::pair<double, double>> atoms() const {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : pieces_)
      if (p.is_atom()) out.emplace_back(p.x0, p.mass);
    return out;
  }

  struct Samples {
    std::vector<double> nodes, density, cdf;
  };

  /// Node/density/cdf view of the absolutely continuous part.
  Samples samples() const {
    Samples s;
    double acc = 0.0;
    for (const auto& p : pieces_) {
      if (p.is_atom()) continue;
      if (!s.nodes.empty() && s.nodes.back() == p.x0) {
        s.density.back() = 0.5 * (s.density.back() + p.r0);
      } else {
        s.nodes.push_back(p.x0);
        s.density.push_back(p.r0);
        s.cdf.push_back(acc);
      }
      acc += p.mass;
      s.nodes.push_back(p.x1);
      s.density.push_back(p.r1);
      s.cdf.push_back(acc);
    }
    return s;
  }

  double total_mass() const { return cum_.back(); }

  double density_at(double x) const {
    for (const auto& p : pieces_) {
      if (p.is_atom() || x < p.x0 || x > p.x1) continue;
      return p.r0 + (p.r1 - p.r0) * (x - p.x0) / (p.x1 - p.x0);
    }
    return 0.0;
  }

  double cdf_at(double x) const {
    const auto it = std::upper_bound(pieces_.begin(), pieces_.end(), x,
                                     [](double v, const Piece& p) { return v < p.x0; });
    if (it == pieces_.begin()) return 0.0;
    const std::size_t i = static_cast<std::size_t>(it - pieces_.begin()) - 1;
    const Piece& p = pieces_[i];
    if (p.is_atom() || x >= p.x1) return cum_[i + 1];
    return cum_[i] + p.mass * p.fraction((x - p.x0) / (p.x1 - p.x0));
  }

  /// Generalized inverse cdf; s must lie in (0,1).
  double quantile(double s) const {
    if (!(s > 0.0 && s < 1.0)) detail::fail(ErrorCode::out_of_domain, "quantile level must be in (0,1)");
    return quantile_closed(s);
  }

  /// Quantile on [0,1]: the ends map to the support endpoints.
  double quantile_closed(double s) const {
    if (s <= 0.0) return pieces_.front().x0;
    const std::size_t i = piece_index(s);
    const Piece& p = pieces_[i];
    return p.locate((s - cum_[i]) / p.mass);
  }

  /// Index of the piece that carries level s (cum_[i] < s <= cum_[i+1]).
  std::size_t piece_index(double s) const {
    const auto it = std::lower_bound(cum_.begin() + 1, cum_.end(), s);
    const auto i = static_cast<std::size_t>(it - cum_.begin()) - 1;
    return std::min(i, pieces_.size() - 1);
  }

  const std::vector<double>& cumulative() const { return cum_; }

  GridMeasure translated(double c) const {
    auto p = pieces_;
    for (auto& q : p) {
      q.x0 += c;
      q.x1 += c;
    }
    return rebuilt(std::move(p));
  }

  /// Law of c*X for c > 0.
  GridMeasure scaled(double c) const {
    if (!(c > 0.0)) detail::fail(ErrorCode::invalid_input, "scale factor must be positive");
    auto p = pieces_;
    for (auto& q : p) {
      q.x0 *= c;
      q.x1 *= c;
      q.r0 /= c;
      q.r1 /= c;
    }
    return rebuilt(std::move(p));
  }

  double mean() const;

  /// Replaces the cached quantile table (used when exact values are known).
  void set_quantile_table(std::vector<double> q) {
    if (q.size() != kQuantileGrid) detail::fail(ErrorCode::invalid_input, "quantile table size");
    quantiles_ = std::move(q);
  }
  GridMeasure centered() const { return translated(-mean()); }

 private:
  GridMeasure rebuilt(std::vector<Piece> p) const {
    GridMeasure m;
    m.pieces_ = std::move(p);
    m.finalize();
    return m;
  }

  void finalize() {
    cum_.assign(pieces_.size() + 1, 0.0);
    for (std::size_t i = 0; i < pieces_.size(); ++i) cum_[i + 1] = cum_[i] + pieces_[i].mass;
    quantiles_.resize(kQuantileGrid);
    for (std::size_t k = 0; k < kQuantileGrid; ++k)
      quantiles_[k] = quantile_closed((static_cast<double>(k) + 0.5) / kQuantileGrid);
  }

  std::vector<Piece> pieces_;
  std::vector<double> cum_;
  std::vector<double> quantiles_;
};

/// ∫ x^k dm, with each cell integrated against its linear density shape.
inline double moment(const GridMeasure& m, int k) {
  if (k < 0) detail::fail(ErrorCode::invalid_input, "moment order must be nonnegative");
  double total = 0.0;
  for (const auto& p : m.pieces()) {
    if (p.is_atom()) {
      total += p.mass * std::pow(p.x0, k);
      continue;
    }
    const double h = p.x1 - p.x0;
    const double sum = p.r0 + p.r1;
    double acc = 0.0;
    for (std::size_t g = 0; g < 4; ++g) {
      const double t = 0.5 * (1.0 + detail::kGL4x[g]);
      const double shape = sum > 0.0 ? (p.r0 + (p.r1 - p.r0) * t) / (0.5 * sum) : 1.0;
      acc += 0.5 * detail::kGL4w[g] * shape * std::pow(p.x0 + t * h, k);
    }
    total += p.mass * acc;
  }
  return total;
}

inline double GridMeasure::mean() const { return moment(*this, 1); }

/// ∫ g dm; cells containing a listed kink of g are split there first.
inline double expectation(const GridMeasure& m, const std::function<double(double)>& g,
                          const std::vector<double>& kinks = {0.0}) {
  double total = 0.0;
  for (const auto& p : m.pieces()) {
    if (p.is_atom()) {
      total += p.mass * g(p.x0);
      continue;
    }
    std::vector<double> cuts{0.0};
    for (double k : kinks)
      if (k > p.x0 && k < p.x1) cuts.push_back((k - p.x0) / (p.x1 - p.x0));
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    const double h = p.x1 - p.x0;
    const double sum = p.r0 + p.r1;
    double acc = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double lo = cuts[c], hi = cuts[c + 1];
      for (std::size_t q = 0; q < 4; ++q) {
        const double t = lo + 0.5 * (hi - lo) * (1.0 + detail::kGL4x[q]);
        const double shape = sum > 0.0 ? (p.r0 + (p.r1 - p.r0) * t) / (0.5 * sum) : 1.0;
        acc += 0.5 * (hi - lo) * detail::kGL4w[q] * shape * g(p.x0 + t * h);
      }
    }
    total += p.mass * acc;
  }
  return total;
}

inline double quantile(const GridMeasure& m, double s) { return m.quantile(s); }

/// Law of f(X) for X ~ m and f nondecreasing. Flat stretches of f become atoms.
/// Cells are bisected until the output cell cdf matches f at the quarter points; the
/// stored quantile table is f∘Q exactly.
inline GridMeasure pushforward_monotone(const GridMeasure& m, const std::function<double(double)>& f,
                                        const std::function<double(double)>& fprime = {}) {
  const auto [a, b] = m.support();
  const double scale = std::max({1.0, std::abs(f(a)), std::abs(f(b))});
  const double flat_tol = 1e-14 * scale;
  auto deriv = [&](double x) {
    if (fprime) return fprime(x);
    const double e = 6e-6 * std::max(1.0, std::abs(x));
    return (f(x + e) - f(x - e)) / (2.0 * e);
  };
  auto decreasing = []() {
    detail::fail(ErrorCode::invalid_input, "map must be nondecreasing on the support");
  };

  std::vector<Piece> out;
  double pending = 0.0;  // leftover mass from unresolvable slivers
  auto push = [&](Piece p) {
    p.mass += pending;
    pending = 0.0;
    if (p.is_atom() && !out.empty() && out.back().is_atom() && out.back().x0 == p.x0) {
      out.back().mass += p.mass;
      return;
    }
    out.push_back(p);
  };

  std::function<void(const Piece&, double, double, double, double, double, int)> map_cell =
      [&](const Piece& p, double x0, double x1, double y0, double y1, double w, int depth) {
        if (y1 < y0 - flat_tol) decreasing();
        if (y1 - y0 <= flat_tol) {
          push(Piece{y0, y0, w, 0.0, 0.0});
          return;
        }
        const double h = p.x1 - p.x0;
        auto rho = [&](double x) { return p.r0 + (p.r1 - p.r0) * (x - p.x0) / h; };
        double d0 = rho(x0) / deriv(x0);
        double d1 = rho(x1) / deriv(x1);
        const double avg = w / (y1 - y0);
        if (!std::isfinite(d0) || d0 < 0.0) d0 = std::isfinite(d1) ? std::max(0.0, 2.0 * avg - d1) : avg;
        if (!std::isfinite(d1) || d1 < 0.0) d1 = std::max(0.0, 2.0 * avg - d0);
        const Piece cand{y0, y1, w, d0, d1};

        const double f0 = p.fraction((x0 - p.x0) / h), f1 = p.fraction((x1 - p.x0) / h);
        const double span = f1 - f0;
        bool ok = span > 0.0;
        double ym = y0, fm = 0.5 * (f0 + f1);
        const double xm = 0.5 * (x0 + x1);
        for (double q : {0.25, 0.5, 0.75}) {
          const double xq = x0 + q * (x1 - x0);
          const double yq = f(xq);
          if (yq < y0 - flat_tol || yq > y1 + flat_tol) decreasing();
          const double fq = p.fraction((xq - p.x0) / h);
          if (q == 0.5) {
            ym = yq;
            fm = fq;
          }
          if (ok && std::abs(cand.locate((fq - f0) / span) - yq) > 1e-6 * (y1 - y0) + 1e-14 * scale)
            ok = false;
        }
        if (ok) {
          push(cand);
          return;
        }
        if (depth >= 48 || w < 1e-17) {
          pending += w;
          return;
        }
        const double wl = span > 0.0 ? w * (fm - f0) / span : 0.5 * w;
        map_cell(p, x0, xm, y0, ym, wl, depth + 1);
        map_cell(p, xm, x1, ym, y1, w - wl, depth + 1);
      };

  double prev_y = -std::numeric_limits<double>::infinity();
  for (const auto& p : m.pieces()) {
    const double y0 = f(p.x0);
    const double y1 = p.is_atom() ? y0 : f(p.x1);
    if (y0 < prev_y - flat_tol) decreasing();
    prev_y = y1;
    if (p.is_atom())
      push(Piece{y0, y0, p.mass, 0.0, 0.0});
    else
      map_cell(p, p.x0, p.x1, y0, y1, p.mass, 0);
  }
  if (pending > 0.0 && !out.empty()) out.back().mass += pending;
  auto result = GridMeasure::from_pieces(std::move(out));
  std::vector<double> q = m.quantiles();
  for (auto& v : q) v = f(v);
  result.set_quantile_table(std::move(q));
  return result;
}

/// (1/π) PV ∫ dm(t)/(x−t), exact for the piecewise-linear density.
inline double hilbert_transform(const GridMeasure& m, double x) {
  double acc = 0.0;
  for (const auto& p : m.pieces()) {
    if (p.is_atom()) {
      if (x == p.x0) detail::fail(ErrorCode::out_of_domain, "Hilbert transform evaluated at an atom");
      acc += p.mass / (x - p.x0);
      continue;
    }
    const double h = p.x1 - p.x0;
    const double slope = (p.r1 - p.r0) / h;
    const double lx = p.r0 + slope * (x - p.x0);
    const double d0 = x - p.x0, d1 = x - p.x1;
    double lg;
    if (d0 == 0.0) {
      lg = -std::log(std::abs(d1));
      acc += lx * lg - slope * h;
      continue;
    }
    if (d1 == 0.0) {
      lg = std::log(std::abs(d0));
      acc += lx * lg - slope * h;
      continue;
    }
    const double ratio = h / d1;
    lg = std::abs(ratio) < 0.5 ? std::log1p(ratio) : std::log(std::abs(d0 / d1));
    acc += lx * lg - slope * h;
  }
  return acc / std::numbers::pi;
}

namespace detail {

// E[-log|S - T|] for S, T independent uniforms on [p0,p1] and [q0,q1].
inline double neg_log_pair(double p0, double p1, double q0, double q1) {
  const double a = p1 - p0, b = q1 - q0;
  const double delta = 0.5 * (p0 + p1) - 0.5 * (q0 + q1);
  if (std::abs(delta) >= 4.0 * (a + b)) {
    const double a2 = a * a, b2 = b * b;
    const double x2 = a2 / 12.0, x4 = a2 * a2 / 80.0, x6 = a2 * a2 * a2 / 448.0,
                 x8 = a2 * a2 * a2 * a2 / 2304.0;
    const double y2 = b2 / 12.0, y4 = b2 * b2 / 80.0, y6 = b2 * b2 * b2 / 448.0,
                 y8 = b2 * b2 * b2 * b2 / 2304.0;
    const double u2 = x2 + y2;
    const double u4 = x4 + 6.0 * x2 * y2 + y4;
    const double u6 = x6 + 15.0 * x4 * y2 + 15.0 * x2 * y4 + y6;
    const double u8 = x8 + 28.0 * x6 * y2 + 70.0 * x4 * y4 + 28.0 * x2 * y6 + y8;
    const double i2 = 1.0 / (delta * delta);
    return -std::log(std::abs(delta)) +
           i2 * (u2 / 2.0 + i2 * (u4 / 4.0 + i2 * (u6 / 6.0 + i2 * u8 / 8.0)));
  }
  auto G = [](double u) {
    if (u == 0.0) return 0.0;
    return 0.5 * u * u * std::log(std::abs(u)) - 0.75 * u * u;
  };
  const double integral = G(p1 - q0) - G(p0 - q0) - G(p1 - q1) + G(p0 - q1);
  return -integral / (a * b);
}

}  // namespace detail

/// ∬ −log|s−t| with each cell treated as uniform; +∞ when atoms are present.
inline double log_energy(const GridMeasure& m) {
  if (m.has_atoms()) return std::numeric_limits<double>::infinity();
  const auto& ps = m.pieces();
  double total = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double hi = ps[i].x1 - ps[i].x0;
    total += ps[i].mass * ps[i].mass * (1.5 - std::log(hi));
    double row = 0.0;
    for (std::size_t j = i + 1; j < ps.size(); ++j)
      row += ps[j].mass * detail::neg_log_pair(ps[i].x0, ps[i].x1, ps[j].x0, ps[j].x1);
    total += 2.0 * ps[i].mass * row;
  }
  return total;
}

namespace detail {

struct QuantileIntegrals {
  double q1q1 = 0.0, q2q2 = 0.0, q1q2 = 0.0, diff2 = 0.0;
};

// ∫₀¹ of Q1², Q2², Q1·Q2 and (Q1−Q2)² over the merged level breakpoints.
inline QuantileIntegrals quantile_integrals(const GridMeasure& m1, const GridMeasure& m2) {
  const auto& c1 = m1.cumulative();
  const auto& c2 = m2.cumulative();
  std::vector<double> levels;
  levels.reserve(c1.size() + c2.size());
  std::merge(c1.begin(), c1.end(), c2.begin(), c2.end(), std::back_inserter(levels));
  const double top = std::min(c1.back(), c2.back());

  QuantileIntegrals out;
  std::size_t i = 0, j = 0;
  auto gl5 = [&](double sa, double sb) {
    const Piece& a = m1.pieces()[i];
    const Piece& b = m2.pieces()[j];
    const double half = 0.5 * (sb - sa), mid = 0.5 * (sa + sb);
    QuantileIntegrals r;
    for (std::size_t g = 0; g < 5; ++g) {
      const double sg = mid + half * kGL5x[g];
      const double qa = a.locate((sg - c1[i]) / a.mass), qb = b.locate((sg - c2[j]) / b.mass);
      const double w = half * kGL5w[g];
      r.q1q1 += w * qa * qa;
      r.q2q2 += w * qb * qb;
      r.q1q2 += w * qa * qb;
      r.diff2 += w * (qa - qb) * (qa - qb);
    }
    return r;
  };
  // Adaptive bisection: quantiles bend sharply where a cell's end density is
  // small and behave like square roots where it vanishes.
  std::function<void(double, double, const QuantileIntegrals&, int)> adapt =
      [&](double sa, double sb, const QuantileIntegrals& whole, int depth) {
        const double sm = 0.5 * (sa + sb);
        const auto l = gl5(sa, sm), r = gl5(sm, sb);
        const double err = std::abs(l.q1q2 + r.q1q2 - whole.q1q2) +
                           std::abs(l.diff2 + r.diff2 - whole.diff2) +
                           std::abs(l.q1q1 + r.q1q1 - whole.q1q1) +
                           std::abs(l.q2q2 + r.q2q2 - whole.q2q2);
        const double scale = 1.0 + std::abs(whole.q1q1) + std::abs(whole.q2q2);
        if (depth >= 40 || err <= 1e-15 * scale + 1e-13 * (sb - sa) * scale) {
          out.q1q1 += l.q1q1 + r.q1q1;
          out.q2q2 += l.q2q2 + r.q2q2;
          out.q1q2 += l.q1q2 + r.q1q2;
          out.diff2 += l.diff2 + r.diff2;
          return;
        }
        adapt(sa, sm, l, depth + 1);
        adapt(sm, sb, r, depth + 1);
      };
  double prev = 0.0;
  for (double s : levels) {
    s = std::min(s, top);
    if (!(s > prev)) continue;
    const double mid = 0.5 * (prev + s);
    i = m1.piece_index(mid);
    j = m2.piece_index(mid);
    adapt(prev, s, gl5(prev, s), 0);
    prev = s;
  }
  return out;
}

}  // namespace detail

inline double wasserstein2_sq(const GridMeasure& m1, const GridMeasure& m2) {
  return detail::quantile_integrals(m1, m2).diff2;
}

/// ∫₀¹ Q1 Q2 ds, cross-checked against ½M₂ + ½M₂ − ½W₂².
inline double max_correlation(const GridMeasure& m1, const GridMeasure& m2) {
  const auto q = detail::quantile_integrals(m1, m2);
  const double via_identity = 0.5 * q.q1q1 + 0.5 * q.q2q2 - 0.5 * q.diff2;
  if (std::abs(via_identity - q.q1q2) > 1e-8 * (1.0 + q.q1q1 + q.q2q2))
    detail::fail(ErrorCode::internal, "maximal correlation identity check failed");
  return q.q1q2;
}

/// McCann interpolation: quantile function (1−t)Q₀ + tQ₁.
inline GridMeasure displacement_interpolate(const GridMeasure& m0, const GridMeasure& m1, double t) {
  if (!(t >= 0.0 && t <= 1.0)) detail::fail(ErrorCode::out_of_domain, "t must lie in [0,1]");
  if (m0.has_atoms()) detail::fail(ErrorCode::invalid_input, "initial measure must be non-atomic");
  std::vector<double> levels;
  levels.reserve(m0.cumulative().size() + m1.cumulative().size());
  levels.insert(levels.end(), m0.cumulative().begin(), m0.cumulative().end());
  levels.insert(levels.end(), m1.cumulative().begin(), m1.cumulative().end());
  std::sort(levels.begin(), levels.end());
  const double top = std::min(m0.cumulative().back(), m1.cumulative().back());
  std::vector<double> lv;
  for (double s : levels) {
    s = std::min(s, top);
    if (lv.empty() || s > lv.back() + 1e-15) lv.push_back(s);
  }
  lv.back() = top;

  auto side = [](const GridMeasure& m, std::size_t idx, double s, double& x, double& dens) {
    const Piece& p = m.pieces()[idx];
    const double lo = m.cumulative()[idx];
    const double tt = p.position((s - lo) / p.mass);
    x = p.x0 + (p.x1 - p.x0) * tt;
    dens = p.is_atom() ? std::numeric_limits<double>::infinity() : p.r0 + (p.r1 - p.r0) * tt;
  };
  auto combine = [](double d0, double d1, double t) {
    const double inv = (t < 1.0 ? (1.0 - t) / d0 : 0.0) + (t > 0.0 ? t / d1 : 0.0);
    return inv > 0.0 && std::isfinite(inv) ? 1.0 / inv : 0.0;
  };

  auto build = [&](double sa, double sb, double tt) {
    const double sm = 0.5 * (sa + sb);
    const std::size_t i0 = m0.piece_index(sm), i1 = m1.piece_index(sm);
    double xa0, xb0, xa1, xb1, da0, db0, da1, db1;
    side(m0, i0, sa, xa0, da0);
    side(m0, i0, sb, xb0, db0);
    side(m1, i1, sa, xa1, da1);
    side(m1, i1, sb, xb1, db1);
    Piece p;
    p.x0 = (1.0 - tt) * xa0 + tt * xa1;
    p.x1 = std::max(p.x0, (1.0 - tt) * xb0 + tt * xb1);
    p.mass = sb - sa;
    if (p.x1 > p.x0) {
      p.r0 = combine(da0, da1, tt);
      p.r1 = combine(db0, db1, tt);
    }
    return p;
  };

  const std::vector<double>& grid = lv;

  std::vector<Piece> out;
  out.reserve(grid.size());
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    Piece p = build(grid[k], grid[k + 1], t);
    if (!out.empty() && p.x0 < out.back().x1) {
      p.x0 = out.back().x1;
      p.x1 = std::max(p.x1, p.x0);
    }
    out.push_back(p);
  }
  return GridMeasure::from_pieces(std::move(out));
}

/// Comonotone coupling of two measures on the shared quantile grid.
struct TransportPlanDiag {
  GridMeasure source;
  GridMeasure target;
  std::vector<double> map_values;
};

inline TransportPlanDiag monotone_plan(const GridMeasure& source, const GridMeasure& target) {
  return TransportPlanDiag{source, target, target.quantiles()};
}

}  // namespace freemoment
