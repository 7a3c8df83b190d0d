#include "carpetq/word.hpp"

#include <cmath>
#include <stdexcept>

namespace carpetq {

CarpetWord::CarpetWord(const Carpet& carpet, std::vector<DigitPair> pairs, std::vector<int> tail)
    : pairs_(std::move(pairs)), tail_(std::move(tail)) {
  const int k = length();
  if (k < 1) throw std::invalid_argument("carpet word must be non-empty");
  if (static_cast<int>(pairs_.size()) != carpet.ell(k)) {
    throw std::invalid_argument("carpet word " + to_string() + ": " + std::to_string(pairs_.size()) +
                                " pairs but ell(" + std::to_string(k) + ") = " +
                                std::to_string(carpet.ell(k)));
  }
  for (const auto& d : pairs_) {
    if (!carpet.has_pair(d)) throw std::invalid_argument("carpet word " + to_string() + ": pair not in G");
  }
  for (int j : tail_) {
    if (!carpet.has_row(j)) throw std::invalid_argument("carpet word " + to_string() + ": row not in Gy");
  }
}

CarpetWord CarpetWord::unpack(const Carpet& carpet, PackedView packed) {
  CarpetWord w;
  const int l = carpet.ell(static_cast<int>(packed.size()));
  for (std::size_t h = 0; h < packed.size(); ++h) {
    if (static_cast<int>(h) < l) {
      w.pairs_.push_back(carpet.pair_at(packed[h]));
    } else {
      w.tail_.push_back(carpet.row_at(packed[h]));
    }
  }
  return w;
}

PackedWord CarpetWord::pack(const Carpet& carpet) const {
  PackedWord out;
  out.reserve(pairs_.size() + tail_.size());
  for (const auto& d : pairs_) out.push_back(carpet.pair_index(d));
  for (int j : tail_) out.push_back(carpet.row_index(j));
  return out;
}

std::string CarpetWord::to_string() const {
  std::string s = "(";
  for (std::size_t h = 0; h < pairs_.size(); ++h) {
    if (h) s += ",";
    s += "(" + std::to_string(pairs_[h].i) + "," + std::to_string(pairs_[h].j) + ")";
  }
  s += ") x (";
  for (std::size_t h = 0; h < tail_.size(); ++h) {
    if (h) s += ",";
    s += std::to_string(tail_[h]);
  }
  return s + ")";
}

CarpetWord flat_predecessor(const Carpet& carpet, const CarpetWord& word) {
  auto packed = word.pack(carpet);
  if (packed.size() < 2) throw std::invalid_argument("length-1 words have no predecessor");
  return CarpetWord::unpack(carpet, packed::flat_predecessor(carpet, packed));
}

std::vector<CarpetWord> carpet_children(const Carpet& carpet, const CarpetWord& word) {
  const int k = word.length();
  std::vector<CarpetWord> out;
  const auto& Gy = carpet.params().Gy;
  if (carpet.ell(k + 1) == carpet.ell(k)) {
    for (int j : Gy) {
      auto tail = word.tail();
      tail.push_back(j);
      out.emplace_back(carpet, word.pairs(), std::move(tail));
    }
    return out;
  }
  if (word.tail().empty()) {
    for (std::size_t idx = 0; idx < carpet.num_pairs(); ++idx) {
      auto pairs = word.pairs();
      pairs.push_back(carpet.pair_at(static_cast<std::uint8_t>(idx)));
      out.emplace_back(carpet, std::move(pairs), std::vector<int>{});
    }
    return out;
  }
  const int lead = word.tail().front();
  for (int i : carpet.params().Gx.at(lead)) {
    for (int j : Gy) {
      auto pairs = word.pairs();
      pairs.push_back({i, lead});
      std::vector<int> tail(word.tail().begin() + 1, word.tail().end());
      tail.push_back(j);
      out.emplace_back(carpet, std::move(pairs), std::move(tail));
    }
  }
  return out;
}

Rational word_mass(const Carpet& carpet, const CarpetWord& word) {
  return packed::mass(carpet, word.pack(carpet));
}

ApproxSquare square_geometry(const Carpet& carpet, const CarpetWord& word) {
  auto w = word.pack(carpet);
  auto cell = packed::grid_cell(carpet, w);
  ApproxSquare sq;
  const BigInt nl = pow(BigInt(carpet.n()), static_cast<unsigned>(cell.ell));
  const BigInt mk = pow(BigInt(carpet.m()), static_cast<unsigned>(cell.k));
  sq.x_low = Rational(cell.x, nl);
  sq.y_low = Rational(cell.y, mk);
  sq.x_low.canonicalize();
  sq.y_low.canonicalize();
  sq.width = Rational(1, nl);
  sq.height = Rational(1, mk);
  sq.width.canonicalize();
  sq.height.canonicalize();
  sq.mass = packed::mass(carpet, w);
  // |F| = m^-k sqrt(1 + (m^k / n^l)^2), with 1 <= m^k / n^l < n.
  const double ratio = Rational(mk, nl).get_d();
  sq.diameter = std::exp(-cell.k * std::log(static_cast<double>(carpet.m()))) *
                std::sqrt(1.0 + ratio * ratio);
  return sq;
}

namespace packed {

BigInt mass_numerator(const Carpet& carpet, PackedView word) {
  const int l = carpet.ell(static_cast<int>(word.size()));
  BigInt num = 1;
  for (std::size_t h = 0; h < word.size(); ++h) {
    const std::uint64_t f =
        static_cast<int>(h) < l ? carpet.p_num(word[h]) : carpet.q_num(word[h]);
    mpz_mul_ui(num.get_mpz_t(), num.get_mpz_t(), f);
  }
  return num;
}

Rational mass(const Carpet& carpet, PackedView word) {
  Rational r(mass_numerator(carpet, word),
             pow(BigInt(static_cast<unsigned long>(carpet.denominator())),
                 static_cast<unsigned>(word.size())));
  r.canonicalize();
  return r;
}

double log_mass(const Carpet& carpet, PackedView word) {
  const int l = carpet.ell(static_cast<int>(word.size()));
  double acc = 0;
  for (std::size_t h = 0; h < word.size(); ++h) {
    acc += static_cast<int>(h) < l ? carpet.log_p(word[h]) : carpet.log_q(word[h]);
  }
  return acc;
}

PackedWord flat_predecessor(const Carpet& carpet, PackedView word) {
  const int k = static_cast<int>(word.size());
  if (k < 2) throw std::invalid_argument("length-1 words have no predecessor");
  const int l = carpet.ell(k);
  PackedWord out(word.begin(), word.end() - 1);
  if (l == carpet.ell(k - 1)) return out;
  // Demote the last pair to its row digit; it becomes the leading tail digit. With an
  // empty tail that digit is the one dropped.
  if (l < k) out[l - 1] = carpet.row_of_pair(word[l - 1]);
  return out;
}

GridCell grid_cell(const Carpet& carpet, PackedView word) {
  GridCell c;
  c.k = static_cast<int>(word.size());
  c.ell = carpet.ell(c.k);
  c.x = 0;
  c.y = 0;
  for (int h = 0; h < c.k; ++h) {
    int j;
    if (h < c.ell) {
      const auto& d = carpet.pair_at(word[h]);
      c.x = c.x * carpet.n() + d.i;
      j = d.j;
    } else {
      j = carpet.row_at(word[h]);
    }
    c.y = c.y * carpet.m() + j;
  }
  return c;
}

}  // namespace packed

}  // namespace carpetq
