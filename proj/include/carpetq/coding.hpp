#pragma once

#include "carpetq/partition.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace carpetq {

// A word omega x rho of Phi*: |omega| = ell(|omega| + |rho|). The packed form is the same
// byte layout as CarpetWord, so L and its inverse are the identity on packed words.
class CodingWord {
 public:
  // Throws std::invalid_argument unless the word lies in Phi*.
  CodingWord(const Carpet& carpet, std::vector<DigitPair> omega, std::vector<int> rho);
  static CodingWord unpack(const Carpet& carpet, PackedView packed);

  const std::vector<DigitPair>& omega() const { return omega_; }
  const std::vector<int>& rho() const { return rho_; }
  int total() const { return static_cast<int>(omega_.size() + rho_.size()); }
  PackedWord pack(const Carpet& carpet) const;
  std::string to_string() const;

  friend bool operator==(const CodingWord&, const CodingWord&) = default;

 private:
  CodingWord() = default;
  std::vector<DigitPair> omega_;
  std::vector<int> rho_;
};

CodingWord L_map(const Carpet& carpet, const CarpetWord& sigma);
CarpetWord L_inverse(const Carpet& carpet, const CodingWord& w);

// p_omega * q_rho.
Rational lambda_mass(const Carpet& carpet, const CodingWord& w);

// Drops the last rho digit if ell(t) = ell(t-1), else the last omega pair.
CodingWord coding_predecessor(const Carpet& carpet, const CodingWord& w);

// a.omega is a prefix of b.omega and a.rho a prefix of b.rho.
bool is_descendant(const CodingWord& a, const CodingWord& b);

// Replaces the last omega pair (i_l, j_l) by (i, j_last) and the last rho digit by j_l.
// Throws std::invalid_argument for an empty omega or rho, or i outside Gx(j_last).
CodingWord swap_tail(const Carpet& carpet, const CodingWord& w, int i);

namespace packed {
PackedWord coding_predecessor(const Carpet& carpet, PackedView word);
}

// xi_1 = xi_min, xi_(j+1) = min{h in (xi_j, xi_max] : ell(h) = ell(xi_j) + 1}.
std::vector<int> xi_sequence(const Carpet& carpet, int xi_min, int xi_max);

class AntichainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FamilyRecord {
  std::vector<PackedWord> f_words;
  std::vector<PackedWord> g_words;
  Rational mass;  // of F, equal to that of G when the swap preserves mass
  double f_term = 0;  // sum of lambda log lambda over F
  double g_term = 0;
};

struct StageLog {
  int stage = 0;  // l + 1
  int xi = 0;     // the length being replaced
  std::size_t gamma_size = 0;
  std::size_t families = 0;
  std::size_t f_words = 0;
  std::size_t g_words = 0;
  Rational f_mass;
  Rational g_mass;
  double f_term = 0;
  double g_term = 0;
  std::size_t family_mass_failures = 0;     // families whose F and G masses differ
  std::size_t mass_band_failures = 0;     // G words with lambda(w) >= eta^k or lambda(w^-) < eta^k
  std::size_t bound_failures = 0;  // families with |F-term - G-term| > C1 lambda(F)
  double max_family_ratio = 0;     // max |F-term - G-term| / lambda(F)
  std::vector<FamilyRecord> detail;  // word-level log, only when requested
};

struct Antichain {
  int k = 0;
  WordStore words;
  std::vector<int> xi;
  std::vector<StageLog> stages;
  int l_min = 0;
  int l_max = 0;
  std::size_t initial_count = 0;
  double initial_entropy = 0;  // sum of lambda log lambda over L(Lambda_k)
  double final_entropy = 0;
  double delta_k = 0;         // |sum over families of G-term - F-term|
  double delta_k_direct = 0;  // |final_entropy - initial_entropy|
  Rational initial_weighted_length;  // sum of lambda |w|, exact
  Rational final_weighted_length;

  std::size_t size() const { return words.size(); }
  bool family_mass_exact() const;
  bool mass_band_holds() const;
  bool family_bounds_hold() const;
  bool weighted_length_exact() const { return initial_weighted_length == final_weighted_length; }
};

struct AntichainOptions {
  int full_log_max_k = 4;  // keep word-level family logs up to this level
};

// The staged replacement construction applied to L(Lambda_k). Throws AntichainError when a
// family is incomplete or a G word collides with a live word.
Antichain build_antichain(const Carpet& carpet, const PartitionLambdaK& partition,
                          const AntichainOptions& options = {});

struct AntichainReport {
  bool incomparable = false;
  std::size_t comparable_pairs = 0;  // words with a live ancestor
  std::string example;
  Rational mass_sum;
  bool mass_one = false;
  bool maximal() const { return incomparable && mass_one; }
};

// Pairwise incomparability via ancestor lookup (in Phi* the ancestors of a word are its
// predecessor chain) plus the exact mass sum.
AntichainReport verify_maximal_antichain(const Carpet& carpet, const WordStore& words, unsigned threads = 0);

// The same incomparability test by comparing all pairs with is_descendant.
std::size_t count_comparable_pairs_quadratic(const Carpet& carpet, const WordStore& words);

// U_k = ell(k) sum p log p + (k - ell(k)) sum q log q, and d_k = U_k / (-k log m).
double compute_U_k(const Carpet& carpet, int k);
double compute_d_k(const Carpet& carpet, int k);
// d_k by summing over every word of Phi_k with exact masses.
double d_k_exhaustive(const Carpet& carpet, int k);

struct TValue {
  double t = 0;
  double d_min = 0;  // min and max of d_h over the word lengths present
  double d_max = 0;
};
// sum lambda log lambda / sum lambda log m^-|w|.
TValue compute_t(const Carpet& carpet, const WordStore& words);

struct SkValue {
  int k = 0;
  double s_k = 0;
  std::size_t phi_k = 0;
  int xi_min = 0;
  int xi_max = 0;
  double entropy = 0;      // sum mu log mu
  double scale = 0;        // sum mu log m^-|sigma|
};
SkValue compute_s_k(const Carpet& carpet, const PartitionLambdaK& partition);
SkValue compute_s_k_stream(const Carpet& carpet, int k, unsigned threads = 0);

struct SequencePoint {
  int k = 0;
  std::size_t phi_k = 0;
  int xi_min = 0;
  int xi_max = 0;
  double d_k = 0;
  double t_k = std::numeric_limits<double>::quiet_NaN();  // NaN when no antichain was built
  double s_k = 0;
  double s0 = 0;
  double bound_dk = 0;  // 2 Hp / (k log m)
  double bound_sk = 0;  // (C1 + 2 Hp) / (xi_min log m)
  double bound_tk = 0;  // 2 Hp / (xi_min log m)
  bool pass = false;
};

// Tolerance for the floating comparison 0 <= s0 - d_k.
inline constexpr double kDkTolerance = 1e-12;

SequencePoint make_sequence_point(const Carpet& carpet, const SkValue& s, double t_k);

}  // namespace carpetq
