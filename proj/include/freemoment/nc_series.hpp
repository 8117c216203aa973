#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "freemoment/error.hpp"
#include "freemoment/trace_table.hpp"
#include "freemoment/word.hpp"

namespace freemoment {

namespace nc_detail {
[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, "nc_series", msg); }

inline void check_shape(int n, int D) {
  if (n < 1 || n > Word::kMaxVars) fail(ErrorCode::invalid_input, "number of variables must be in 1..4");
  if (D < 0 || D > Word::kMaxLength) fail(ErrorCode::invalid_input, "max degree must be in 0..64");
}
}  // namespace nc_detail

/// Noncommutative power series in n self-adjoint variables with real coefficients,
/// truncated at max_degree. Zero coefficients are never stored.
class NCSeries {
 public:
  using Terms = std::map<Word, double>;

  NCSeries() = default;
  NCSeries(int n_vars, int max_degree) : n_(n_vars), D_(max_degree) { nc_detail::check_shape(n_, D_); }

  static NCSeries constant(int n, int D, double c) {
    NCSeries s(n, D);
    s.add_term(Word{}, c);
    return s;
  }

  /// x_i with 0-based index i.
  static NCSeries variable(int n, int D, int i) {
    NCSeries s(n, D);
    s.add_term(Word::letter(i), 1.0);
    return s;
  }

  static NCSeries monomial(int n, int D, const Word& w, double c = 1.0) {
    NCSeries s(n, D);
    s.add_term(w, c);
    return s;
  }

  /// (x₁, …, xₙ).
  static std::vector<NCSeries> identity_map(int n, int D) {
    std::vector<NCSeries> v;
    for (int i = 0; i < n; ++i) v.push_back(variable(n, D, i));
    return v;
  }

  int n_vars() const { return n_; }
  int max_degree() const { return D_; }
  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  double coeff(const Word& w) const {
    auto it = terms_.find(w);
    return it == terms_.end() ? 0.0 : it->second;
  }
  double constant_term() const { return coeff(Word{}); }

  /// Adds c·w; words above the truncation degree are dropped.
  void add_term(const Word& w, double c) {
    if (w.size() > D_ || c == 0.0) return;
    for (int k = 0; k < w.size(); ++k)
      if (w[k] >= n_) nc_detail::fail(ErrorCode::invalid_input, "word uses a variable out of range");
    auto [it, inserted] = terms_.try_emplace(w, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  /// Highest word length present; 0 for the zero series.
  int degree() const { return terms_.empty() ? 0 : terms_.rbegin()->first.size(); }

  /// Lowest word length present; 0 for the zero series.
  int low_degree() const { return terms_.empty() ? 0 : terms_.begin()->first.size(); }

  NCSeries truncated(int D) const {
    NCSeries s(n_, D);
    for (const auto& [w, c] : terms_)
      if (w.size() <= D) s.terms_.emplace(w, c);
    return s;
  }

  bool is_even() const {
    for (const auto& [w, c] : terms_)
      if (w.size() % 2) return false;
    return true;
  }

  /// Σ |c| over odd-length words.
  double odd_mass() const {
    double m = 0.0;
    for (const auto& [w, c] : terms_)
      if (w.size() % 2) m += std::abs(c);
    return m;
  }

  /// Coefficient of every word equals that of its reversal, within tol·(1 + |c|).
  bool is_self_adjoint(double tol = 0.0) const {
    for (const auto& [w, c] : terms_)
      if (std::abs(c - coeff(w.reversed())) > tol * (1.0 + std::abs(c))) return false;
    return true;
  }

  double max_abs_coeff() const {
    double m = 0.0;
    for (const auto& [w, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  NCSeries& operator+=(const NCSeries& o) {
    check_compatible(o);
    for (const auto& [w, c] : o.terms_) add_term(w, c);
    return *this;
  }
  NCSeries& operator-=(const NCSeries& o) {
    check_compatible(o);
    for (const auto& [w, c] : o.terms_) add_term(w, -c);
    return *this;
  }
  NCSeries& operator*=(double a) {
    if (a == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [w, c] : terms_) c *= a;
    return *this;
  }

  friend NCSeries operator+(NCSeries a, const NCSeries& b) { return a += b; }
  friend NCSeries operator-(NCSeries a, const NCSeries& b) { return a -= b; }
  friend NCSeries operator*(NCSeries a, double s) { return a *= s; }
  friend NCSeries operator*(double s, NCSeries a) { return a *= s; }
  NCSeries operator-() const { return NCSeries(*this) *= -1.0; }

  friend bool operator==(const NCSeries& a, const NCSeries& b) { return a.n_ == b.n_ && a.terms_ == b.terms_; }

  void check_compatible(const NCSeries& o) const {
    if (o.n_ != n_) nc_detail::fail(ErrorCode::invalid_input, "number of variables differs");
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string s;
    for (const auto& [w, c] : terms_) {
      if (!s.empty()) s += " + ";
      s += std::to_string(c) + "*" + w.to_string();
    }
    return s;
  }

 private:
  int n_ = 1;
  int D_ = 0;
  Terms terms_;
};

/// Concatenation product truncated at min(a.D, b.D).
inline NCSeries multiply(const NCSeries& a, const NCSeries& b) {
  a.check_compatible(b);
  const int D = std::min(a.max_degree(), b.max_degree());
  NCSeries out(a.n_vars(), D);
  std::unordered_map<Word, double, WordHash> acc;
  for (const auto& [wa, ca] : a.terms()) {
    if (wa.size() > D) break;
    for (const auto& [wb, cb] : b.terms()) {
      if (wa.size() + wb.size() > D) break;
      acc[wa + wb] += ca * cb;
    }
  }
  for (const auto& [w, c] : acc) out.add_term(w, c);
  return out;
}

inline NCSeries operator*(const NCSeries& a, const NCSeries& b) { return multiply(a, b); }

/// f(args₁, …, argsₙ) truncated at D.
inline NCSeries substitute(const NCSeries& f, const std::vector<NCSeries>& args, int D) {
  if (static_cast<int>(args.size()) != f.n_vars())
    nc_detail::fail(ErrorCode::invalid_input, "substitute needs one argument per variable");
  const int m = args.empty() ? 1 : args.front().n_vars();
  bool no_constant = true;
  for (const auto& a : args) {
    if (a.n_vars() != m) nc_detail::fail(ErrorCode::invalid_input, "arguments disagree on number of variables");
    no_constant = no_constant && a.constant_term() == 0.0;
  }
  std::vector<NCSeries> targs;
  for (const auto& a : args) targs.push_back(a.truncated(D));
  NCSeries out(m, D);
  std::unordered_map<Word, NCSeries, WordHash> prefix;
  prefix.emplace(Word{}, NCSeries::constant(m, D, 1.0));
  // Terms come in order of increasing length, so each prefix product is ready when needed.
  for (const auto& [w, c] : f.terms()) {
    if (no_constant && w.size() > D) break;
    for (int k = 1; k <= w.size(); ++k) {
      const Word p = w.prefix(k);
      if (prefix.count(p)) continue;
      prefix.emplace(p, multiply(prefix.at(w.prefix(k - 1)), targs[static_cast<std::size_t>(w[k - 1])]));
    }
    out += prefix.at(w) * c;
  }
  return out;
}

/// 𝒟_{x_i} f with 0-based i: each occurrence of x_i is removed and the word rotated.
inline NCSeries cyclic_gradient(const NCSeries& f, int i) {
  if (i < 0 || i >= f.n_vars()) nc_detail::fail(ErrorCode::invalid_input, "variable index out of range");
  NCSeries out(f.n_vars(), f.max_degree());
  for (const auto& [w, c] : f.terms())
    for (int k = 0; k < w.size(); ++k)
      if (w[k] == i) out.add_term(w.suffix_from(k + 1) + w.prefix(k), c);
  return out;
}

/// (𝒟₁f, …, 𝒟ₙf).
inline std::vector<NCSeries> cyclic_gradient(const NCSeries& f) {
  std::vector<NCSeries> v;
  for (int i = 0; i < f.n_vars(); ++i) v.push_back(cyclic_gradient(f, i));
  return v;
}

/// Element of M⊗M^op: (a⊗b)(c⊗d) = ac⊗db. Degree bound applies to |left|+|right|.
class TensorSeries {
 public:
  using Key = std::pair<Word, Word>;
  using Terms = std::map<Key, double>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      const WordHash h;
      return h(k.first) * 0x9E3779B97F4A7C15ull ^ h(k.second);
    }
  };

  TensorSeries() = default;
  TensorSeries(int n_vars, int max_degree) : n_(n_vars), D_(max_degree) { nc_detail::check_shape(n_, D_); }

  /// 1⊗1.
  static TensorSeries unit(int n, int D) {
    TensorSeries t(n, D);
    t.add_term(Word{}, Word{}, 1.0);
    return t;
  }

  int n_vars() const { return n_; }
  int max_degree() const { return D_; }
  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  double coeff(const Word& l, const Word& r) const {
    auto it = terms_.find({l, r});
    return it == terms_.end() ? 0.0 : it->second;
  }

  void add_term(const Word& l, const Word& r, double c) {
    if (l.size() + r.size() > D_ || c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace({l, r}, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  int degree() const {
    int d = 0;
    for (const auto& [k, c] : terms_) d = std::max(d, k.first.size() + k.second.size());
    return d;
  }

  TensorSeries& operator+=(const TensorSeries& o) {
    for (const auto& [k, c] : o.terms_) add_term(k.first, k.second, c);
    return *this;
  }
  TensorSeries& operator-=(const TensorSeries& o) {
    for (const auto& [k, c] : o.terms_) add_term(k.first, k.second, -c);
    return *this;
  }
  TensorSeries& operator*=(double a) {
    if (a == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [k, c] : terms_) c *= a;
    return *this;
  }
  friend TensorSeries operator+(TensorSeries a, const TensorSeries& b) { return a += b; }
  friend TensorSeries operator-(TensorSeries a, const TensorSeries& b) { return a -= b; }
  friend TensorSeries operator*(TensorSeries a, double s) { return a *= s; }
  friend TensorSeries operator*(double s, TensorSeries a) { return a *= s; }
  friend bool operator==(const TensorSeries& a, const TensorSeries& b) { return a.terms_ == b.terms_; }

  /// Product in M⊗M^op, truncated at min of the two bounds.
  friend TensorSeries operator*(const TensorSeries& a, const TensorSeries& b) {
    const int D = std::min(a.D_, b.D_);
    TensorSeries out(a.n_, D);
    std::vector<std::pair<int, const std::pair<const Key, double>*>> rhs;
    rhs.reserve(b.terms_.size());
    for (const auto& t : b.terms_) rhs.emplace_back(t.first.first.size() + t.first.second.size(), &t);
    std::stable_sort(rhs.begin(), rhs.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    std::unordered_map<Key, double, KeyHash> acc;
    for (const auto& [ka, ca] : a.terms_) {
      const int da = ka.first.size() + ka.second.size();
      if (da > D) continue;
      for (const auto& [db, t] : rhs) {
        if (da + db > D) break;
        acc[{ka.first + t->first.first, t->first.second + ka.second}] += ca * t->second;
      }
    }
    for (const auto& [k, c] : acc) out.add_term(k.first, k.second, c);
    return out;
  }

  /// (a⊗b)#y = a·y·b, truncated at y's degree bound.
  NCSeries apply(const NCSeries& y) const {
    NCSeries out(y.n_vars(), y.max_degree());
    for (const auto& [k, c] : terms_)
      for (const auto& [w, cy] : y.terms())
        if (k.first.size() + w.size() + k.second.size() <= y.max_degree())
          out.add_term(k.first + w + k.second, c * cy);
    return out;
  }

  /// a⊗b ↦ b⊗a.
  TensorSeries flipped() const {
    TensorSeries t(n_, D_);
    for (const auto& [k, c] : terms_) t.add_term(k.second, k.first, c);
    return t;
  }

 private:
  int n_ = 1;
  int D_ = 0;
  Terms terms_;
};

/// ∂_{x_i} f with 0-based i: prefix ⊗ suffix at each occurrence of x_i.
inline TensorSeries difference_quotient(const NCSeries& f, int i) {
  if (i < 0 || i >= f.n_vars()) nc_detail::fail(ErrorCode::invalid_input, "variable index out of range");
  TensorSeries t(f.n_vars(), f.max_degree());
  for (const auto& [w, c] : f.terms())
    for (int k = 0; k < w.size(); ++k)
      if (w[k] == i) t.add_term(w.prefix(k), w.suffix_from(k + 1), c);
  return t;
}

/// n×n matrix over M⊗M^op.
class MatrixTensor {
 public:
  MatrixTensor() = default;
  MatrixTensor(int n, int max_degree) : n_(n), entries_(static_cast<std::size_t>(n * n), TensorSeries(n, max_degree)) {}

  /// Diagonal 1⊗1.
  static MatrixTensor identity(int n, int D) {
    MatrixTensor m(n, D);
    for (int i = 0; i < n; ++i) m.at(i, i) = TensorSeries::unit(n, D);
    return m;
  }

  int size() const { return n_; }
  TensorSeries& at(int i, int j) { return entries_[static_cast<std::size_t>(i * n_ + j)]; }
  const TensorSeries& at(int i, int j) const { return entries_[static_cast<std::size_t>(i * n_ + j)]; }

  bool is_zero() const {
    for (const auto& e : entries_)
      if (!e.is_zero()) return false;
    return true;
  }

  MatrixTensor& operator+=(const MatrixTensor& o) {
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += o.entries_[k];
    return *this;
  }
  MatrixTensor& operator*=(double a) {
    for (auto& e : entries_) e *= a;
    return *this;
  }
  friend MatrixTensor operator+(MatrixTensor a, const MatrixTensor& b) { return a += b; }
  friend MatrixTensor operator*(MatrixTensor a, double s) { return a *= s; }

  friend MatrixTensor operator*(const MatrixTensor& a, const MatrixTensor& b) {
    const int n = a.n_;
    const int D = std::min(a.entries_.front().max_degree(), b.entries_.front().max_degree());
    MatrixTensor out(n, D);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          if (!a.at(i, k).is_zero() && !b.at(k, j).is_zero()) out.at(i, j) += a.at(i, k) * b.at(k, j);
    return out;
  }

  /// (m·v)_i = Σ_j m_ij # v_j.
  std::vector<NCSeries> apply(const std::vector<NCSeries>& v) const {
    if (static_cast<int>(v.size()) != n_) nc_detail::fail(ErrorCode::invalid_input, "vector length mismatch");
    std::vector<NCSeries> out;
    for (int i = 0; i < n_; ++i) {
      NCSeries s(v.front().n_vars(), v.front().max_degree());
      for (int j = 0; j < n_; ++j) s += at(i, j).apply(v[static_cast<std::size_t>(j)]);
      out.push_back(std::move(s));
    }
    return out;
  }

  TensorSeries trace() const {
    TensorSeries t(entries_.front().n_vars(), entries_.front().max_degree());
    for (int i = 0; i < n_; ++i) t += at(i, i);
    return t;
  }

 private:
  int n_ = 0;
  std::vector<TensorSeries> entries_;
};

/// (JP)_{ij} = ∂_{x_j} P_i.
inline MatrixTensor jacobian(const std::vector<NCSeries>& p) {
  if (p.empty()) nc_detail::fail(ErrorCode::invalid_input, "empty vector");
  const int n = p.front().n_vars();
  if (static_cast<int>(p.size()) != n) nc_detail::fail(ErrorCode::invalid_input, "jacobian needs n components");
  int D = 0;
  for (const auto& c : p) D = std::max(D, c.max_degree());
  MatrixTensor m(n, D);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m.at(i, j) = difference_quotient(p[static_cast<std::size_t>(i)], j);
  return m;
}

enum class SymOp { S, N, Sigma, Pi };

/// Cyclic symmetrization S, number operator N, its inverse Σ, projection Π.
inline NCSeries symmetrize_ops(const NCSeries& f, SymOp op) {
  NCSeries out(f.n_vars(), f.max_degree());
  for (const auto& [w, c] : f.terms()) {
    const int L = w.size();
    switch (op) {
      case SymOp::S:
        if (L == 0) {
          out.add_term(w, c);
        } else {
          for (int j = 0; j < L; ++j) out.add_term(w.rotated(j), c / L);
        }
        break;
      case SymOp::N:
        out.add_term(w, c * L);
        break;
      case SymOp::Sigma:
        if (L == 0) nc_detail::fail(ErrorCode::invalid_input, "Sigma is undefined on a nonzero constant term");
        out.add_term(w, c / L);
        break;
      case SymOp::Pi:
        if (L > 0) out.add_term(w, c);
        break;
    }
  }
  return out;
}

inline NCSeries S(const NCSeries& f) { return symmetrize_ops(f, SymOp::S); }
inline NCSeries N(const NCSeries& f) { return symmetrize_ops(f, SymOp::N); }
inline NCSeries Sigma(const NCSeries& f) { return symmetrize_ops(f, SymOp::Sigma); }
inline NCSeries Pi(const NCSeries& f) { return symmetrize_ops(f, SymOp::Pi); }

/// Σ |a_I| A^{|I|}.
inline double norm_A(const NCSeries& f, double A) {
  if (!(A >= 1.0)) nc_detail::fail(ErrorCode::invalid_input, "norm radius must be at least 1");
  double s = 0.0;
  for (const auto& [w, c] : f.terms()) s += std::abs(c) * std::pow(A, w.size());
  return s;
}

/// Σ |c| A^{|left|} B^{|right|}.
inline double norm_AB(const TensorSeries& t, double A, double B) {
  if (!(A >= 1.0) || !(B >= 1.0)) nc_detail::fail(ErrorCode::invalid_input, "norm radii must be at least 1");
  double s = 0.0;
  for (const auto& [k, c] : t.terms()) s += std::abs(c) * std::pow(A, k.first.size()) * std::pow(B, k.second.size());
  return s;
}

/// Σ coeff·(τ(left)·right + left·τ(right)).
inline NCSeries trace_contract(const TensorSeries& t, const TraceTable& tau) {
  NCSeries out(t.n_vars(), t.max_degree());
  for (const auto& [k, c] : t.terms()) {
    if (k.first.size() > tau.degree_cap() || k.second.size() > tau.degree_cap())
      nc_detail::fail(ErrorCode::invalid_input, "tensor word exceeds the trace degree cap");
    out.add_term(k.second, c * tau(k.first));
    out.add_term(k.first, c * tau(k.second));
  }
  return out;
}

inline NCSeries trace_contract(const MatrixTensor& m, const TraceTable& tau) { return trace_contract(m.trace(), tau); }

/// Σ_{k=1}^{order} (−1)^{k+1} m^k / k.
inline MatrixTensor log_neumann(const MatrixTensor& m, int order) {
  if (order < 1) nc_detail::fail(ErrorCode::invalid_input, "order must be at least 1");
  MatrixTensor out = m * 0.0;
  MatrixTensor power = m;
  for (int k = 1; k <= order && !power.is_zero(); ++k) {
    out += power * ((k % 2 ? 1.0 : -1.0) / k);
    if (k < order) power = power * m;
  }
  return out;
}

}  // namespace freemoment
