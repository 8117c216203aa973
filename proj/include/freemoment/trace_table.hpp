#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "freemoment/error.hpp"
#include "freemoment/word.hpp"

namespace freemoment {

/// Truncated tracial state on words of length ≤ degree_cap. One value is stored per
/// class of words under rotation and reversal, so trace symmetry holds by construction.
class TraceTable {
 public:
  static constexpr std::size_t kMaxRawWords = std::size_t{1} << 24;

  TraceTable() = default;

  TraceTable(int n_vars, int degree_cap, double cutoff = 3.0)
      : n_(n_vars), cap_(degree_cap), cutoff_(cutoff) {
    if (n_ < 1 || n_ > Word::kMaxVars)
      throw Error(ErrorCode::invalid_input, "sd_moments", "number of variables must be in 1..4");
    if (cap_ < 0 || cap_ > Word::kMaxLength)
      throw Error(ErrorCode::invalid_input, "sd_moments", "degree cap must be in 0..64");
    if (!(cutoff_ > 0.0)) throw Error(ErrorCode::invalid_input, "sd_moments", "cutoff must be positive");
    std::size_t total = 0, count = 1;
    for (int L = 0; L <= cap_; ++L) {
      total += count;
      if (total > kMaxRawWords)
        throw Error(ErrorCode::invalid_input, "sd_moments", "degree cap too large for this number of variables");
      count *= static_cast<std::size_t>(n_);
    }
    build_classes();
    values_.assign(reps_.size(), 0.0);
    values_[0] = 1.0;
  }

  int n_vars() const { return n_; }
  int degree_cap() const { return cap_; }
  double cutoff() const { return cutoff_; }

  std::size_t class_count() const { return reps_.size(); }
  const Word& representative(std::size_t id) const { return reps_[id]; }
  double value(std::size_t id) const { return values_[id]; }
  void set_value(std::size_t id, double v) { values_[id] = id == 0 ? 1.0 : v; }
  const std::vector<double>& values() const { return values_; }

  /// Class index of a word; throws when the word exceeds the cap.
  std::size_t class_of(const Word& w) const {
    check(w);
    return ids_[static_cast<std::size_t>(w.size())][dense_index(w)];
  }

  double operator()(const Word& w) const { return values_[class_of(w)]; }
  void set(const Word& w, double v) { set_value(class_of(w), v); }

  /// Classes ordered by increasing length.
  const std::vector<std::size_t>& classes_of_length(int L) const {
    return by_length_[static_cast<std::size_t>(L)];
  }

  /// Copy restricted to words of length ≤ cap.
  TraceTable restricted(int cap) const {
    if (cap > cap_) throw Error(ErrorCode::invalid_input, "sd_moments", "cannot extend a trace table");
    TraceTable t(n_, cap, cutoff_);
    for (std::size_t id = 0; id < t.class_count(); ++id) t.values_[id] = (*this)(t.reps_[id]);
    return t;
  }

  /// max over classes of |value|/T^{|w|} − 1, positive when the cutoff bound fails.
  double cutoff_excess() const {
    double worst = -1.0;
    for (std::size_t id = 1; id < reps_.size(); ++id)
      worst = std::max(worst, std::abs(values_[id]) / std::pow(cutoff_, reps_[id].size()) - 1.0);
    return worst;
  }

  void check(const Word& w) const {
    if (w.size() > cap_)
      throw Error(ErrorCode::invalid_input, "sd_moments",
                  "word of length " + std::to_string(w.size()) + " exceeds trace degree cap " + std::to_string(cap_));
    for (int k = 0; k < w.size(); ++k)
      if (w[k] >= n_) throw Error(ErrorCode::invalid_input, "sd_moments", "word uses a variable out of range");
  }

 private:
  std::size_t dense_index(const Word& w) const {
    std::size_t idx = 0;
    for (int k = 0; k < w.size(); ++k) idx = idx * static_cast<std::size_t>(n_) + static_cast<std::size_t>(w[k]);
    return idx;
  }

  Word word_of(int L, std::size_t idx) const {
    std::vector<int> letters(static_cast<std::size_t>(L));
    for (int k = L - 1; k >= 0; --k) {
      letters[static_cast<std::size_t>(k)] = static_cast<int>(idx % static_cast<std::size_t>(n_));
      idx /= static_cast<std::size_t>(n_);
    }
    return Word(letters);
  }

  void build_classes() {
    constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
    ids_.resize(static_cast<std::size_t>(cap_) + 1);
    by_length_.resize(static_cast<std::size_t>(cap_) + 1);
    std::size_t count = 1;
    for (int L = 0; L <= cap_; ++L) {
      auto& ids = ids_[static_cast<std::size_t>(L)];
      ids.assign(count, kUnset);
      for (std::size_t idx = 0; idx < count; ++idx) {
        if (ids[idx] != kUnset) continue;
        const std::size_t id = reps_.size();
        const Word w = word_of(L, idx);
        const Word r = w.reversed();
        Word best = w;
        for (int k = 0; k < std::max(L, 1); ++k) {
          const Word a = L ? w.rotated(k) : w, b = L ? r.rotated(k) : r;
          ids[dense_index(a)] = id;
          ids[dense_index(b)] = id;
          if (a < best) best = a;
          if (b < best) best = b;
        }
        reps_.push_back(best);
        by_length_[static_cast<std::size_t>(L)].push_back(id);
      }
      count *= static_cast<std::size_t>(n_);
    }
  }

  int n_ = 1;
  int cap_ = 0;
  double cutoff_ = 3.0;
  std::vector<std::vector<std::size_t>> ids_;
  std::vector<std::vector<std::size_t>> by_length_;
  std::vector<Word> reps_;
  std::vector<double> values_;
};

}  // namespace freemoment
