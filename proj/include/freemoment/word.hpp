#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "freemoment/error.hpp"

namespace freemoment {

/// Word in at most four letters 0..3, packed two bits per letter with the first
/// letter most significant. Ordered by length, then lexicographically.
class Word {
 public:
  static constexpr int kMaxLength = 64;
  static constexpr int kMaxVars = 4;
  using Code = unsigned __int128;

  Word() = default;

  Word(std::initializer_list<int> letters) {
    for (int l : letters) push_back(l);
  }

  explicit Word(const std::vector<int>& letters) {
    for (int l : letters) push_back(l);
  }

  static Word letter(int i) {
    Word w;
    w.push_back(i);
    return w;
  }

  /// Word of `len` copies of letter i.
  static Word power(int i, int len) {
    Word w;
    for (int k = 0; k < len; ++k) w.push_back(i);
    return w;
  }

  int size() const { return len_; }
  bool empty() const { return len_ == 0; }
  Code code() const { return code_; }

  int operator[](int k) const { return static_cast<int>((code_ >> (2 * (len_ - 1 - k))) & 3u); }

  void push_back(int letter) {
    if (letter < 0 || letter >= kMaxVars)
      throw Error(ErrorCode::invalid_input, "nc_series", "letter index out of range");
    if (len_ >= kMaxLength) throw Error(ErrorCode::invalid_input, "nc_series", "word longer than 64 letters");
    code_ = (code_ << 2) | static_cast<Code>(letter);
    ++len_;
  }

  /// First k letters.
  Word prefix(int k) const {
    Word w;
    w.len_ = static_cast<std::uint8_t>(k);
    w.code_ = k == 0 ? 0 : code_ >> (2 * (len_ - k));
    return w;
  }

  /// Letters k..end.
  Word suffix_from(int k) const {
    Word w;
    const int m = len_ - k;
    w.len_ = static_cast<std::uint8_t>(m);
    w.code_ = m == 0 ? 0 : (m >= 64 ? code_ : code_ & ((Code{1} << (2 * m)) - 1));
    return w;
  }

  Word operator+(const Word& o) const {
    if (len_ + o.len_ > kMaxLength)
      throw Error(ErrorCode::invalid_input, "nc_series", "word longer than 64 letters");
    Word w;
    w.len_ = static_cast<std::uint8_t>(len_ + o.len_);
    w.code_ = o.len_ == 0 ? code_ : ((len_ == 0 ? 0 : code_ << (2 * o.len_)) | o.code_);
    return w;
  }

  Word reversed() const {
    Word w;
    for (int k = len_ - 1; k >= 0; --k) w.push_back((*this)[k]);
    return w;
  }

  /// Cyclic rotation starting at letter k.
  Word rotated(int k) const { return suffix_from(k) + prefix(k); }

  std::vector<int> letters() const {
    std::vector<int> v(static_cast<std::size_t>(len_));
    for (int k = 0; k < len_; ++k) v[static_cast<std::size_t>(k)] = (*this)[k];
    return v;
  }

  int count(int letter) const {
    int c = 0;
    for (int k = 0; k < len_; ++k) c += (*this)[k] == letter;
    return c;
  }

  /// "x1x2x1", or "1" for the empty word (letters shown 1-based).
  std::string to_string() const {
    if (len_ == 0) return "1";
    std::string s;
    for (int k = 0; k < len_; ++k) s += "x" + std::to_string((*this)[k] + 1);
    return s;
  }

  friend bool operator==(const Word& a, const Word& b) { return a.len_ == b.len_ && a.code_ == b.code_; }
  friend std::strong_ordering operator<=>(const Word& a, const Word& b) {
    if (a.len_ != b.len_) return a.len_ <=> b.len_;
    if (a.code_ < b.code_) return std::strong_ordering::less;
    if (a.code_ > b.code_) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

 private:
  Code code_ = 0;
  std::uint8_t len_ = 0;
};

struct WordHash {
  std::size_t operator()(const Word& w) const {
    const auto c = w.code();
    const auto lo = static_cast<std::uint64_t>(c), hi = static_cast<std::uint64_t>(c >> 64);
    std::uint64_t h = lo * 0x9E3779B97F4A7C15ull ^ (hi + 0x632BE59BD9B4E019ull + (lo << 6) + (lo >> 2));
    h ^= static_cast<std::uint64_t>(w.size()) * 0xC2B2AE3D27D4EB4Full;
    h ^= h >> 31;
    return static_cast<std::size_t>(h);
  }
};

/// Lexicographically least word among the rotations of w and of its reversal.
inline Word canonical_cyclic(const Word& w) {
  Word best = w;
  const Word r = w.reversed();
  for (int k = 0; k < w.size(); ++k) {
    const Word a = w.rotated(k), b = r.rotated(k);
    if (a < best) best = a;
    if (b < best) best = b;
  }
  return best;
}

}  // namespace freemoment
