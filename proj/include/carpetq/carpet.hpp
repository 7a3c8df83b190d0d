#pragma once

#include "carpetq/rational.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace carpetq {

// A digit pair (i, j) of the affine map f_ij(x, y) = ((x + i) / n, (y + j) / m).
struct DigitPair {
  int i = 0;
  int j = 0;
  friend auto operator<=>(const DigitPair&, const DigitPair&) = default;
};

struct MapWeight {
  DigitPair digit;
  Rational p;
};

// Input data: grid sizes, digit set G and its probability vector.
struct CarpetSpec {
  int n = 0;
  int m = 0;
  std::vector<MapWeight> maps;
};

struct ValidationIssue {
  std::string invariant;  // stable machine-readable name, e.g. "n_ge_m"
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;
  bool ok() const { return errors.empty(); }
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

ValidationReport validate_spec(const CarpetSpec& spec);

// max(|i1 - i2|, |j1 - j2|) >= 2 for every pair of distinct digits.
bool check_separation(const CarpetSpec& spec);

struct DerivedParams {
  double theta = 0;  // log m / log n
  double k0 = 0;     // 1 / theta
  std::vector<int> Gy;                  // ordered projection of G onto y
  std::map<int, std::vector<int>> Gx;   // j -> ordered i with (i, j) in G
  std::map<int, Rational> q;            // j -> sum of p_ij over Gx(j)
  Rational p_min, p_max, q_min, q_max;
  Rational eta;  // p_min * q_min
  double s0 = 0;
  double Hp = 0;  // sum p log(1/p)
  double Hq = 0;  // sum q log(1/q)
  double C0 = 0;
  double C1 = 0;
  double delta = 0;
  std::int64_t A1 = 0;
  std::int64_t A2 = 0;
  double D0 = 0;
  double ball_exponent = 0;
  double eps0 = 0;
  double D_ball = 0;
  double C_ball = 0;
};

// Requires a valid spec (throws ValidationError otherwise).
DerivedParams derive_params(const CarpetSpec& spec);

// The same dimension through the entropy form theta*Hp/log m + (1-theta)*Hq/log m.
double s0_entropy_form(const DerivedParams& params, int m);

// A validated carpet with its derived constants and digit indexing.
//
// Words are stored as byte strings: a pair is its index into the sorted digit set G, a
// tail digit is its index into the sorted projection Gy. The pair/tail split of a word
// of length k is fixed by ell(k), so the bytes alone identify the word.
class Carpet {
 public:
  explicit Carpet(CarpetSpec spec);

  const CarpetSpec& spec() const { return spec_; }
  const DerivedParams& params() const { return params_; }
  int n() const { return spec_.n; }
  int m() const { return spec_.m; }

  // floor(k * theta), decided by exact integer comparison n^l <= m^k < n^(l+1).
  int ell(int k) const;

  std::size_t num_pairs() const { return pairs_.size(); }
  std::size_t num_rows() const { return params_.Gy.size(); }
  const DigitPair& pair_at(std::uint8_t index) const { return pairs_[index]; }
  int row_at(std::uint8_t index) const { return params_.Gy[index]; }
  std::uint8_t pair_index(DigitPair d) const;  // throws std::out_of_range if d not in G
  std::uint8_t row_index(int j) const;         // throws std::out_of_range if j not in Gy
  bool has_pair(DigitPair d) const;
  bool has_row(int j) const;

  const Rational& p(std::uint8_t pair_index) const { return p_[pair_index]; }
  const Rational& q(std::uint8_t row_index) const { return q_[row_index]; }
  double log_p(std::uint8_t pair_index) const { return log_p_[pair_index]; }
  double log_q(std::uint8_t row_index) const { return log_q_[row_index]; }

  // Pair indices of G_x(j) for the row with the given index, ascending in i.
  const std::vector<std::uint8_t>& column_pairs(std::uint8_t row_index) const {
    return column_pairs_[row_index];
  }
  // Row index of a pair's j digit.
  std::uint8_t row_of_pair(std::uint8_t pair_index) const { return row_of_pair_[pair_index]; }

  // Scaled-integer form: p = a / D, q = b / D with a common denominator D.
  std::uint64_t denominator() const { return denom_; }
  std::uint64_t p_num(std::uint8_t pair_index) const { return p_num_[pair_index]; }
  std::uint64_t q_num(std::uint8_t row_index) const { return q_num_[row_index]; }
  // eta = E / D^2.
  std::uint64_t eta_num() const { return eta_num_; }
  std::uint64_t q_max_num() const { return q_max_num_; }

 private:
  CarpetSpec spec_;
  DerivedParams params_;
  std::vector<DigitPair> pairs_;
  std::vector<Rational> p_;
  std::vector<Rational> q_;
  std::vector<double> log_p_;
  std::vector<double> log_q_;
  std::vector<std::vector<std::uint8_t>> column_pairs_;
  std::vector<std::uint8_t> row_of_pair_;
  std::vector<int> row_lookup_;  // j -> row index or -1
  std::uint64_t denom_ = 1;
  std::vector<std::uint64_t> p_num_;
  std::vector<std::uint64_t> q_num_;
  std::uint64_t eta_num_ = 0;
  std::uint64_t q_max_num_ = 0;
  std::vector<int> ell_cache_;
};

// ell(k) without a carpet, by the same exact comparison.
int exact_ell(int n, int m, int k);

}  // namespace carpetq
