#include "carpetq/carpet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

namespace carpetq {

namespace {

constexpr int kEllCacheSize = 4096;
// Pair and row indices are single bytes; eta = E / D^2 needs E = a_min * b_min in 64 bits.
constexpr std::size_t kMaxDigits = 255;
constexpr std::uint64_t kMaxDenominator = std::uint64_t{1} << 31;

std::string describe(DigitPair d) {
  return "(" + std::to_string(d.i) + "," + std::to_string(d.j) + ")";
}

std::string join_report(const ValidationReport& report) {
  std::string out = "invalid carpet spec:";
  for (const auto& e : report.errors) out += " [" + e.invariant + "] " + e.message + ";";
  return out;
}

}  // namespace

ValidationError::ValidationError(ValidationReport report)
    : std::runtime_error(join_report(report)), report_(std::move(report)) {}

ValidationReport validate_spec(const CarpetSpec& spec) {
  ValidationReport report;
  auto fail = [&](std::string name, std::string msg) {
    report.errors.push_back({std::move(name), std::move(msg)});
  };

  if (spec.m < 2) fail("m_ge_2", "m must be at least 2, got " + std::to_string(spec.m));
  if (spec.n < spec.m) {
    fail("n_ge_m", "n >= m required (theta = log m / log n must not exceed 1), got n=" +
                       std::to_string(spec.n) + " m=" + std::to_string(spec.m));
  }
  if (spec.maps.size() < 2) {
    fail("card_G_ge_2", "at least two maps required, got " + std::to_string(spec.maps.size()));
  }
  if (spec.maps.size() > kMaxDigits) {
    fail("card_G_limit", "at most 255 maps supported, got " + std::to_string(spec.maps.size()));
  }

  std::set<DigitPair> seen;
  Rational total = 0;
  for (const auto& w : spec.maps) {
    const auto& d = w.digit;
    if (d.i < 0 || d.i >= spec.n || d.j < 0 || d.j >= spec.m) {
      fail("digit_bounds", "digit " + describe(d) + " outside {0..n-1}x{0..m-1}");
    }
    if (!seen.insert(d).second) fail("distinct_digits", "digit " + describe(d) + " repeated");
    if (sgn(w.p) <= 0 || w.p >= 1) {
      fail("p_in_open_unit", "p" + describe(d) + " = " + to_string(w.p) + " not in (0,1)");
    }
    total += w.p;
  }
  if (!spec.maps.empty() && total != 1) {
    fail("mass_sum_one", "probabilities sum to " + to_string(total) + ", not 1");
  }
  if (report.ok()) {
    BigInt lcm = 1;
    for (const auto& w : spec.maps) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), w.p.get_den_mpz_t());
    if (lcm > BigInt(std::to_string(kMaxDenominator))) {
      fail("denominator_limit", "common denominator " + lcm.get_str() + " exceeds 2^31");
    }
  }
  if (std::min(spec.n, spec.m) < 3 && spec.m >= 2) {
    report.warnings.push_back(
        {"min_nm_ge_3", "the asymptotic order result is stated for grids with min(n,m) >= 3"});
  }
  return report;
}

bool check_separation(const CarpetSpec& spec) {
  for (std::size_t a = 0; a < spec.maps.size(); ++a) {
    for (std::size_t b = a + 1; b < spec.maps.size(); ++b) {
      const auto& u = spec.maps[a].digit;
      const auto& v = spec.maps[b].digit;
      if (std::max(std::abs(u.i - v.i), std::abs(u.j - v.j)) < 2) return false;
    }
  }
  return true;
}

int exact_ell(int n, int m, int k) {
  if (k <= 0) return 0;
  BigInt mk = pow(BigInt(m), static_cast<unsigned>(k));
  // Float guess, then exact correction.
  int l = static_cast<int>(std::floor(k * std::log(static_cast<double>(m)) /
                                      std::log(static_cast<double>(n))));
  l = std::clamp(l, 0, k);
  while (l > 0 && pow(BigInt(n), static_cast<unsigned>(l)) > mk) --l;
  while (pow(BigInt(n), static_cast<unsigned>(l + 1)) <= mk) ++l;
  return l;
}

DerivedParams derive_params(const CarpetSpec& spec) {
  auto report = validate_spec(spec);
  if (!report.ok()) throw ValidationError(std::move(report));

  DerivedParams d;
  const double log_n = std::log(static_cast<double>(spec.n));
  const double log_m = std::log(static_cast<double>(spec.m));
  d.theta = spec.n == spec.m ? 1.0 : log_m / log_n;
  d.k0 = 1.0 / d.theta;

  std::set<int> rows;
  for (const auto& w : spec.maps) rows.insert(w.digit.j);
  d.Gy.assign(rows.begin(), rows.end());
  for (const auto& w : spec.maps) {
    d.Gx[w.digit.j].push_back(w.digit.i);
    d.q[w.digit.j] += w.p;
  }
  for (auto& [j, is] : d.Gx) std::sort(is.begin(), is.end());

  d.p_min = d.p_max = spec.maps.front().p;
  for (const auto& w : spec.maps) {
    d.p_min = std::min(d.p_min, w.p);
    d.p_max = std::max(d.p_max, w.p);
  }
  d.q_min = d.q_max = d.q.begin()->second;
  for (const auto& [j, qj] : d.q) {
    d.q_min = std::min(d.q_min, qj);
    d.q_max = std::max(d.q_max, qj);
  }
  d.eta = d.p_min * d.q_min;

  double sum_plogp = 0;
  for (const auto& w : spec.maps) sum_plogp += to_double(w.p) * log(w.p);
  double sum_qlogq = 0;
  for (const auto& [j, qj] : d.q) sum_qlogq += qj == 1 ? 0.0 : to_double(qj) * log(qj);
  d.Hp = -sum_plogp;
  d.Hq = -sum_qlogq;
  d.s0 = -(d.theta * sum_plogp + (1.0 - d.theta) * sum_qlogq) / log_m;

  const double q_max = to_double(d.q_max);
  const double q_min = to_double(d.q_min);
  d.C0 = -2.0 * q_max * q_max * log(d.p_min);
  d.C1 = d.C0 / (q_min * q_min);

  const double n2p1 = static_cast<double>(spec.n) * spec.n + 1.0;
  d.delta = 1.0 / std::sqrt(n2p1);
  const auto a1 = static_cast<std::int64_t>(std::floor(16.0 / d.delta + 5.0));
  const auto a2 = static_cast<std::int64_t>(std::floor(16.0 / d.delta + 3.0));
  d.A1 = a1 * a1;
  d.A2 = a2 * a2;
  d.D0 = 4.0 * std::numbers::pi * n2p1;
  d.ball_exponent = d.q_max == 1 ? 0.0 : -log(d.q_max) / log_m;
  d.eps0 = std::sqrt(n2p1) / spec.m;
  d.D_ball = d.D0 * std::pow(q_max, (0.5 * std::log(n2p1) - log_m) / log_m);
  d.C_ball = std::pow(2.0, d.ball_exponent) *
             std::max(d.D_ball, std::pow(d.eps0, -d.ball_exponent));
  return d;
}

double s0_entropy_form(const DerivedParams& params, int m) {
  const double log_m = std::log(static_cast<double>(m));
  return params.theta * params.Hp / log_m + (1.0 - params.theta) * params.Hq / log_m;
}

Carpet::Carpet(CarpetSpec spec) : spec_(std::move(spec)), params_(derive_params(spec_)) {
  for (const auto& w : spec_.maps) pairs_.push_back(w.digit);
  std::sort(pairs_.begin(), pairs_.end());
  std::map<DigitPair, Rational> weight;
  for (const auto& w : spec_.maps) weight[w.digit] = w.p;

  row_lookup_.assign(spec_.m, -1);
  for (std::size_t r = 0; r < params_.Gy.size(); ++r) row_lookup_[params_.Gy[r]] = static_cast<int>(r);

  column_pairs_.resize(params_.Gy.size());
  for (std::size_t idx = 0; idx < pairs_.size(); ++idx) {
    const auto& d = pairs_[idx];
    p_.push_back(weight[d]);
    log_p_.push_back(log(weight[d]));
    auto row = static_cast<std::uint8_t>(row_lookup_[d.j]);
    row_of_pair_.push_back(row);
    column_pairs_[row].push_back(static_cast<std::uint8_t>(idx));
  }
  for (auto& col : column_pairs_) {
    std::sort(col.begin(), col.end(),
              [&](std::uint8_t a, std::uint8_t b) { return pairs_[a].i < pairs_[b].i; });
  }
  for (int j : params_.Gy) {
    q_.push_back(params_.q.at(j));
    log_q_.push_back(log(params_.q.at(j)));
  }

  BigInt lcm = 1;
  for (const auto& p : p_) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), p.get_den_mpz_t());
  denom_ = to_u64(lcm);
  for (const auto& p : p_) p_num_.push_back(to_u64(BigInt(p * lcm)));
  for (const auto& q : q_) q_num_.push_back(to_u64(BigInt(q * lcm)));
  eta_num_ = to_u64(BigInt(params_.p_min * lcm)) * to_u64(BigInt(params_.q_min * lcm));
  q_max_num_ = to_u64(BigInt(params_.q_max * lcm));

  // ell(k) for k < kEllCacheSize by running powers.
  ell_cache_.resize(kEllCacheSize);
  BigInt mk = 1, nl1 = spec_.n;  // m^k, n^(l+1)
  int l = 0;
  ell_cache_[0] = 0;
  for (int k = 1; k < kEllCacheSize; ++k) {
    mk *= spec_.m;
    while (nl1 <= mk) {
      ++l;
      nl1 *= spec_.n;
    }
    ell_cache_[k] = l;
  }
}

int Carpet::ell(int k) const {
  if (k < 0) throw std::invalid_argument("ell: negative length");
  if (k < static_cast<int>(ell_cache_.size())) return ell_cache_[k];
  return exact_ell(spec_.n, spec_.m, k);
}

std::uint8_t Carpet::pair_index(DigitPair d) const {
  auto it = std::lower_bound(pairs_.begin(), pairs_.end(), d);
  if (it == pairs_.end() || *it != d) throw std::out_of_range("digit pair " + describe(d) + " not in G");
  return static_cast<std::uint8_t>(it - pairs_.begin());
}

bool Carpet::has_pair(DigitPair d) const { return std::binary_search(pairs_.begin(), pairs_.end(), d); }

std::uint8_t Carpet::row_index(int j) const {
  if (!has_row(j)) throw std::out_of_range("row digit " + std::to_string(j) + " not in Gy");
  return static_cast<std::uint8_t>(row_lookup_[j]);
}

bool Carpet::has_row(int j) const {
  return j >= 0 && j < static_cast<int>(row_lookup_.size()) && row_lookup_[j] >= 0;
}

}  // namespace carpetq
