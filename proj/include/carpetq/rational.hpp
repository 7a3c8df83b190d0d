#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>

namespace carpetq {

// Exact arithmetic is GMP throughout; these are thin helpers around it.
using Rational = mpq_class;
using BigInt = mpz_class;

// Parses "num/den" or a bare integer. Throws std::invalid_argument on malformed input
// or a zero denominator. The result is canonical.
Rational parse_rational(std::string_view text);

std::string to_string(const Rational& r);

Rational pow(const Rational& base, unsigned exponent);
BigInt pow(const BigInt& base, unsigned exponent);

// Nearest double; exact for dyadic rationals that fit.
inline double to_double(const Rational& r) { return r.get_d(); }

// Natural log of a positive rational without going through a double that may underflow.
double log(const Rational& r);

bool fits_u64(const BigInt& v);
std::uint64_t to_u64(const BigInt& v);

}  // namespace carpetq
