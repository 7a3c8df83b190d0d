#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace carpetq;
using namespace carpetq::test;

namespace {

bool has_error(const ValidationReport& r, const std::string& name) {
  for (const auto& e : r.errors) {
    if (e.invariant == name) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("rational parsing is exact") {
  CHECK(parse_rational("1/3") == Rational(1, 3));
  CHECK(parse_rational("2/6") == Rational(1, 3));
  CHECK(parse_rational(" 5 ") == Rational(5));
  CHECK_THROWS_AS(parse_rational("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational("x/3"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational(""), std::invalid_argument);
  CHECK(to_string(parse_rational("4/8")) == "1/2");
}

TEST_CASE("log of tiny rationals does not underflow") {
  const Rational tiny = pow(Rational(1, 3), 2000u);
  CHECK(log(tiny) == doctest::Approx(-2000 * std::log(3.0)).epsilon(1e-14));
}

TEST_CASE("validate_spec accepts the reference carpets") {
  CHECK(validate_spec(spec_a()).ok());
  CHECK(validate_spec(spec_b()).ok());
  CHECK(validate_spec(spec_c()).ok());
  CHECK(validate_spec(spec_a()).warnings.empty());
}

TEST_CASE("validate_spec names the violated invariant") {
  SUBCASE("m > n") {
    CarpetSpec s{3, 4, {map(0, 0, "1/2"), map(2, 2, "1/2")}};
    auto r = validate_spec(s);
    CHECK(has_error(r, "n_ge_m"));
    CHECK_THROWS_AS(Carpet{s}, ValidationError);
  }
  SUBCASE("mass does not sum to one") {
    CarpetSpec s{4, 3, {map(0, 0, "1/2"), map(2, 2, "1/3")}};
    CHECK(has_error(validate_spec(s), "mass_sum_one"));
  }
  SUBCASE("single map") {
    CarpetSpec s{4, 3, {map(0, 0, "1")}};
    auto r = validate_spec(s);
    CHECK(has_error(r, "card_G_ge_2"));
    CHECK(has_error(r, "p_in_open_unit"));
  }
  SUBCASE("digit outside the grid") {
    CarpetSpec s{4, 3, {map(0, 0, "1/2"), map(4, 2, "1/2")}};
    CHECK(has_error(validate_spec(s), "digit_bounds"));
  }
  SUBCASE("repeated digit") {
    CarpetSpec s{4, 3, {map(0, 0, "1/2"), map(0, 0, "1/2")}};
    CHECK(has_error(validate_spec(s), "distinct_digits"));
  }
  SUBCASE("m < 2") {
    CarpetSpec s{4, 1, {map(0, 0, "1/2"), map(2, 0, "1/2")}};
    CHECK(has_error(validate_spec(s), "m_ge_2"));
  }
  SUBCASE("small grid only warns") {
    CarpetSpec s{2, 2, {map(0, 0, "1/2"), map(1, 1, "1/2")}};
    auto r = validate_spec(s);
    CHECK(r.ok());
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].invariant == "min_nm_ge_3");
  }
}

TEST_CASE("check_separation") {
  CHECK(check_separation(spec_a()));
  CHECK_FALSE(check_separation({4, 3, {map(0, 0, "1/2"), map(1, 0, "1/2")}}));
  CHECK(check_separation({4, 3, {map(0, 0, "1")}}));
}

TEST_CASE("derived parameters of carpet A") {
  const auto& d = carpet_a().params();
  CHECK(d.theta == doctest::Approx(0.7924812503605780907).epsilon(1e-15));
  CHECK(d.Gy == std::vector<int>{0, 2});
  CHECK(d.Gx.at(0) == std::vector<int>{0});
  CHECK(d.Gx.at(2) == std::vector<int>{0, 2});
  CHECK(d.q.at(0) == Rational(1, 3));
  CHECK(d.q.at(2) == Rational(2, 3));
  CHECK(d.eta == Rational(1, 9));
  CHECK(d.q_max == Rational(2, 3));
  // Independent 30-digit evaluation of the dimension formula.
  CHECK(std::abs(d.s0 - 0.9127134976190283752669819) < 1e-12);
  CHECK(std::abs(s0_entropy_form(d, 3) - d.s0) < 1e-12);
  CHECK(d.C1 == doctest::Approx(8.7888983093448775312).epsilon(1e-14));
  CHECK(d.delta == doctest::Approx(0.24253562503633297352).epsilon(1e-14));
  CHECK(d.A1 == 4900);
  CHECK(d.A2 == 4624);
  CHECK(d.ball_exponent == doctest::Approx(0.3690702464285425629).epsilon(1e-14));
  CHECK(d.D0 == doctest::Approx(213.62830044410594022).epsilon(1e-14));
  CHECK(d.D_ball == doctest::Approx(189.97174025455833365).epsilon(1e-13));
  CHECK(d.C_ball == doctest::Approx(245.35234648968215665).epsilon(1e-13));
  CHECK(d.eps0 == doctest::Approx(1.3743685418725535166).epsilon(1e-14));
}

TEST_CASE("derived parameters of carpets B and C") {
  const auto& b = carpet_b().params();
  CHECK(b.q_max == 1);
  CHECK(b.s0 == 0.5);
  CHECK(b.ball_exponent == 0.0);
  const auto& c = carpet_c().params();
  CHECK(c.theta == 1.0);
  CHECK(c.s0 == std::log(2.0) / std::log(3.0));
  CHECK(c.eta == Rational(1, 4));
}

TEST_CASE("ell uses exact integer comparison") {
  const auto& a = carpet_a();
  CHECK(a.ell(1) == 0);
  CHECK(a.ell(2) == 1);
  CHECK(a.ell(4) == 3);
  CHECK(a.ell(5) == 3);
  for (int k = 1; k < 60; ++k) CHECK(carpet_c().ell(k) == k);
  // n = 8, m = 4: k theta = 2k/3 lands on integers exactly.
  for (int k = 1; k <= 300; ++k) CHECK(exact_ell(8, 4, k) == 2 * k / 3);
  // Cached and uncached paths agree.
  for (int k : {4095, 4096, 5000}) {
    CHECK(a.ell(k) == exact_ell(4, 3, k));
  }
}

TEST_CASE("scaled integer masses") {
  const auto& a = carpet_a();
  CHECK(a.denominator() == 3);
  CHECK(a.eta_num() == 1);
  CHECK(a.q_max_num() == 2);
  CHECK(a.p_num(0) == 1);
  CHECK(a.q_num(a.row_index(2)) == 2);
}
