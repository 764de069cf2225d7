#ifndef OTPQKD_BITVECTOR_HPP
#define OTPQKD_BITVECTOR_HPP

#include <bit>
#include <compare>
#include <span>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "otpqkd/errors.hpp"

namespace otpqkd {

/// Fixed-length binary vector over GF(2), packed 64 bits per word.
/// Bits past `size()` in the last word are kept zero.
class BitVector {
public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  BitVector() = default;
  explicit BitVector(std::size_t n) : size_(n), words_(word_count(n), 0) {}

  /// Parse "0101..." (position 0 first).
  static BitVector from_string(std::string_view s) {
    BitVector v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '1') {
        v.set(i, true);
      } else if (s[i] != '0') {
        throw Error(ErrorCode::ConfigError, "bit string contains non-binary character");
      }
    }
    return v;
  }

  static constexpr std::size_t word_count(std::size_t n) noexcept { return (n + kWordBits - 1) / kWordBits; }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  bool get(std::size_t i) const noexcept { return (words_[i / kWordBits] >> (i % kWordBits)) & 1U; }
  bool operator[](std::size_t i) const noexcept { return get(i); }

  void set(std::size_t i, bool value) noexcept {
    const Word mask = Word{1} << (i % kWordBits);
    if (value) {
      words_[i / kWordBits] |= mask;
    } else {
      words_[i / kWordBits] &= ~mask;
    }
  }

  void flip(std::size_t i) noexcept { words_[i / kWordBits] ^= Word{1} << (i % kWordBits); }

  void push_back(bool value) {
    if (size_ % kWordBits == 0) words_.push_back(0);
    ++size_;
    set(size_ - 1, value);
  }

  std::size_t popcount() const noexcept {
    std::size_t c = 0;
    for (Word w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  bool any() const noexcept {
    for (Word w : words_) {
      if (w != 0) return true;
    }
    return false;
  }

  /// Inner product over GF(2).
  bool dot(const BitVector& other) const {
    require_same_size(other);
    Word acc = 0;
    for (std::size_t w = 0; w < words_.size(); ++w) acc ^= words_[w] & other.words_[w];
    return (std::popcount(acc) & 1) != 0;
  }

  BitVector& operator^=(const BitVector& other) {
    require_same_size(other);
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] ^= other.words_[w];
    return *this;
  }

  friend BitVector operator^(BitVector a, const BitVector& b) {
    a ^= b;
    return a;
  }

  /// Copy of bits [first, first + count).
  BitVector slice(std::size_t first, std::size_t count) const {
    BitVector out(count);
    for (std::size_t i = 0; i < count; ++i) out.set(i, get(first + i));
    return out;
  }

  std::span<const Word> words() const noexcept { return words_; }
  std::span<Word> mutable_words() noexcept { return words_; }

  /// Clears the unused high bits of the last word after raw word writes.
  void trim() noexcept {
    if (size_ % kWordBits != 0) words_.back() &= (Word{1} << (size_ % kWordBits)) - 1;
  }

  std::string to_string() const {
    std::string s(size_, '0');
    for (std::size_t i = 0; i < size_; ++i) {
      if (get(i)) s[i] = '1';
    }
    return s;
  }

  /// Lowercase hex, 8 bits per byte, position 0 in the most significant bit
  /// of the first byte.
  std::string to_hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * ((size_ + 7) / 8));
    for (std::size_t byte = 0; byte * 8 < size_; ++byte) {
      unsigned value = 0;
      for (std::size_t b = 0; b < 8; ++b) {
        const std::size_t i = byte * 8 + b;
        value = (value << 1) | (i < size_ && get(i) ? 1U : 0U);
      }
      out.push_back(kDigits[value >> 4]);
      out.push_back(kDigits[value & 0xF]);
    }
    return out;
  }

  friend bool operator==(const BitVector& a, const BitVector& b) noexcept {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

  /// Lexicographic order on the bit sequence (0 < 1), then by length.
  friend std::strong_ordering operator<=>(const BitVector& a, const BitVector& b) noexcept {
    const std::size_t common = a.size_ < b.size_ ? a.size_ : b.size_;
    for (std::size_t i = 0; i < common; ++i) {
      if (a.get(i) != b.get(i)) return a.get(i) ? std::strong_ordering::greater : std::strong_ordering::less;
    }
    return a.size_ <=> b.size_;
  }

private:
  void require_same_size(const BitVector& other) const {
    if (other.size_ != size_) {
      throw Error(ErrorCode::DimensionMismatch,
                  "bit vectors of length " + std::to_string(size_) + " and " + std::to_string(other.size_));
    }
  }

  std::size_t size_ = 0;
  std::vector<Word> words_;
};

}  // namespace otpqkd

#endif
