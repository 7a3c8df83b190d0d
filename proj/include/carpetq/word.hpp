#pragma once

#include "carpetq/carpet.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace carpetq {

// Packed word: pair indices followed by tail row indices (see Carpet).
using PackedWord = std::vector<std::uint8_t>;
using PackedView = std::span<const std::uint8_t>;

// A word of Omega_k: ell(k) digit pairs followed by k - ell(k) row digits.
class CarpetWord {
 public:
  // Throws std::invalid_argument unless |pairs| == ell(|pairs| + |tail|), every pair is in G
  // and every tail digit is in Gy.
  CarpetWord(const Carpet& carpet, std::vector<DigitPair> pairs, std::vector<int> tail);
  static CarpetWord unpack(const Carpet& carpet, PackedView packed);

  const std::vector<DigitPair>& pairs() const { return pairs_; }
  const std::vector<int>& tail() const { return tail_; }
  int length() const { return static_cast<int>(pairs_.size() + tail_.size()); }
  PackedWord pack(const Carpet& carpet) const;
  std::string to_string() const;

  friend bool operator==(const CarpetWord&, const CarpetWord&) = default;

 private:
  CarpetWord() = default;
  std::vector<DigitPair> pairs_;
  std::vector<int> tail_;
};

// The closed rectangle F_sigma with exact corners and the exact mass mu(F_sigma).
struct ApproxSquare {
  Rational x_low, y_low;
  Rational width;   // n^-ell(k)
  Rational height;  // m^-k
  Rational mass;
  double diameter = 0;
};

// Drops one symbol so that the result lies in Omega_(k-1). Throws for length-1 words.
CarpetWord flat_predecessor(const Carpet& carpet, const CarpetWord& word);

// All tau in Omega_(k+1) with flat_predecessor(tau) == word, in digit order.
std::vector<CarpetWord> carpet_children(const Carpet& carpet, const CarpetWord& word);

Rational word_mass(const Carpet& carpet, const CarpetWord& word);
ApproxSquare square_geometry(const Carpet& carpet, const CarpetWord& word);

// Packed-form primitives shared by partition and coding code paths.
namespace packed {

// Numerator N with mass = N / D^|word|.
BigInt mass_numerator(const Carpet& carpet, PackedView word);
Rational mass(const Carpet& carpet, PackedView word);
double log_mass(const Carpet& carpet, PackedView word);

PackedWord flat_predecessor(const Carpet& carpet, PackedView word);

// Integer corners: F = [X / n^l, (X+1) / n^l] x [Y / m^k, (Y+1) / m^k].
struct GridCell {
  BigInt x;
  BigInt y;
  int ell = 0;
  int k = 0;
};
GridCell grid_cell(const Carpet& carpet, PackedView word);

}  // namespace packed

}  // namespace carpetq
