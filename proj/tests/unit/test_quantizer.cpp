#include "carpetq/quantizer.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace carpetq;
using namespace carpetq::test;

namespace {

SampleCloud cloud_of(std::vector<Point> points) {
  SampleCloud c;
  for (const auto& p : points) {
    c.x.push_back(p.x);
    c.y.push_back(p.y);
  }
  c.depth = 40;
  return c;
}

}  // namespace

TEST_CASE("symmetric two-point cloud") {
  const auto cloud = cloud_of({{0, 0}, {1, 0}});
  const auto book = Codebook::from_points({{0.5, 0}});
  const auto e = log_distortion(cloud, book);
  CHECK(e.estimate == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  CHECK(e.std_error == 0.0);
  CHECK(e.floored == 0);
  CHECK(e.samples == 2);
}

TEST_CASE("a codebook point on a sample is floored and reported") {
  const auto cloud = cloud_of({{0, 0}, {1, 0}});
  const auto book = Codebook::from_points({{0, 0}});
  const auto e = log_distortion(cloud, book);
  CHECK(e.floored == 1);
  CHECK(e.estimate == doctest::Approx((std::log(1e-300) + 0.0) / 2));
}

TEST_CASE("empty inputs are rejected") {
  CHECK_THROWS_AS(Codebook::from_points({}), std::invalid_argument);
  const auto cloud = cloud_of({{0, 0}});
  CHECK_THROWS_AS(log_distortion(SampleCloud{}, Codebook::from_points({{0, 0}})),
                  std::invalid_argument);
  CHECK_THROWS_AS(refine_codebook(cloud, Codebook::from_points({{0, 0}}), -1, 1e-9),
                  std::invalid_argument);
}

TEST_CASE("one Weiszfeld step") {
  const auto cloud = cloud_of({{0, 0}, {2, 0}});
  const auto start = Codebook::from_points({{0.5, 0}});
  const auto r0 = refine_codebook(cloud, start, 0, 1e-9);
  CHECK(r0.codebook.x == start.x);
  CHECK(r0.codebook.y == start.y);
  CHECK(r0.objective.size() == 1);

  // Weights 1/0.25 and 1/2.25 give x = (2 / 2.25) / (4 + 1 / 2.25) = 0.2.
  const auto r1 = refine_codebook(cloud, start, 1, 1e-9);
  REQUIRE(r1.objective.size() == 2);
  // log(0.2) + log(1.8) < log(0.5) + log(1.5), so the update is the best iterate.
  CHECK(r1.best_iteration == 1);
  CHECK(r1.codebook.x[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(r1.codebook.y[0] == 0.0);
  CHECK(r1.codebook.origin == CodebookOrigin::refined);
}

TEST_CASE("empty cells keep their centers") {
  const auto cloud = cloud_of({{0, 0}, {0.1, 0}});
  const auto start = Codebook::from_points({{0.05, 0.01}, {5, 5}});
  const auto r = refine_codebook(cloud, start, 3, 1e-9);
  CHECK(r.codebook.x[1] == 5.0);
  CHECK(r.codebook.y[1] == 5.0);
}

TEST_CASE("lambda codebook centers lie in their rectangles") {
  const auto& c = carpet_a();
  const auto part = enumerate_lambda_k(c, 3);
  const auto book = lambda_codebook(c, part);
  REQUIRE(book.size() == part.phi_k());
  CHECK(book.origin == CodebookOrigin::lambda_centers);
  for (std::size_t i = 0; i < part.phi_k(); ++i) {
    const auto sq = square_geometry(c, part.word(c, i));
    CHECK(book.x[i] == to_double(sq.x_low + sq.width / 2));
    CHECK(book.y[i] == to_double(sq.y_low + sq.height / 2));
  }
}

TEST_CASE("anchors agree with exact per-word sums") {
  const auto& c = carpet_a();
  for (int k = 2; k <= 4; ++k) {
    const auto part = enumerate_lambda_k(c, k);
    double lower = 0, upper = 0;
    for (std::size_t i = 0; i < part.phi_k(); ++i) {
      const auto w = part.word(c, i);
      const auto sq = square_geometry(c, w);
      const double mu = to_double(sq.mass);
      lower += mu * -w.length() * std::log(3.0);
      upper += mu * std::log(sq.diameter);
    }
    const auto a = compute_anchors(c, k, 1);
    CHECK(a.phi_k == part.phi_k());
    CHECK(a.xi_min == part.xi_min);
    CHECK(a.xi_max == part.xi_max);
    CHECK(a.lower == doctest::Approx(lower).epsilon(1e-12));
    CHECK(a.upper == doctest::Approx(upper).epsilon(1e-12));
    CHECK(a.gap_exact);
    CHECK(a.lower <= a.upper);
    CHECK(a.upper - a.lower <= a.gap_bound);
    CHECK(a.gap_bound == doctest::Approx(std::log(std::sqrt(17.0))));
  }
}

TEST_CASE("lambda codebook distortion is bracketed by the anchors") {
  const auto& c = carpet_a();
  const auto cloud = draw_cloud(c, 200000, 40, 0x5EED);
  for (int k : {3, 4}) {
    const auto d = r_k_diagnostic(c, k, cloud);
    CHECK(d.sandwich);
    CHECK(d.e_hat_est <= d.upper_anchor + 3 * d.std_error);
    CHECK(d.pass());
    CHECK(d.R_k == doctest::Approx(std::log(double(d.phi_k)) / c.params().s0 + d.e_hat_est));
  }
}

TEST_CASE("refinement never worsens the floored objective") {
  const auto& c = carpet_a();
  const auto cloud = draw_cloud(c, 50000, 40, 11);
  const auto part = enumerate_lambda_k(c, 3);
  const auto book = lambda_codebook(c, part);
  const double floor = refine_cell_floor(c, 3);
  CHECK(floor == doctest::Approx(std::pow(3.0, -8)));
  const auto base = log_distortion(cloud, book, floor);
  const auto r = refine_codebook(cloud, book, 4, floor);
  const auto after = log_distortion(cloud, r.codebook, floor);
  CHECK(after.estimate <= base.estimate + 1e-9);
  CHECK(r.objective[0] == base.estimate);
}

TEST_CASE("distortion does not depend on the thread count") {
  const auto& c = carpet_a();
  const auto cloud = draw_cloud(c, 150000, 40, 5, 1);
  const auto book = lambda_codebook(c, enumerate_lambda_k(c, 3));
  const auto a = log_distortion(cloud, book, kDistanceFloor, 1);
  const auto b = log_distortion(cloud, book, kDistanceFloor, 4);
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("disjoint-seed estimates agree within six combined standard errors") {
  const auto& c = carpet_a();
  const auto book = lambda_codebook(c, enumerate_lambda_k(c, 3));
  const auto a = log_distortion(draw_cloud(c, 100000, 40, 101), book);
  const auto b = log_distortion(draw_cloud(c, 100000, 40, 202), book);
  CHECK(std::abs(a.estimate - b.estimate) <
        6 * std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error));
}

TEST_CASE("ball bound") {
  const auto& a = carpet_a();
  CHECK(a.params().ball_exponent == doctest::Approx(1 - std::log(2.0) / std::log(3.0)));
  const auto cloud = draw_cloud(a, 100000, 40, 9);
  std::vector<double> radii;
  for (int e = 2; e <= 8; ++e) radii.push_back(std::pow(3.0, -e));
  radii.push_back(std::sqrt(2.0));
  const auto rep = ball_bound_check(a, cloud, 10, radii, 77);
  CHECK_FALSE(rep.skipped);
  CHECK(rep.rows.size() == 10 * radii.size());
  CHECK(rep.pass());
  for (const auto& row : rep.rows) {
    // The whole square fits in a ball of radius sqrt 2 around any of its points.
    if (row.eps == std::sqrt(2.0)) CHECK(row.mass == 1.0);
  }

  const auto rb = ball_bound_check(carpet_b(), draw_cloud(carpet_b(), 1000, 30, 1), 10, radii, 1);
  CHECK(rb.skipped);
  CHECK(rb.pass());
  CHECK_FALSE(rb.reason.empty());
}

TEST_CASE("drift tests") {
  const std::vector<double> x{2, 3, 4, 5, 6};
  const std::vector<double> flat{1.0, 1.1, 0.9, 1.05, 0.95};
  const std::vector<double> rising{1.0, 2.01, 2.99, 4.02, 5.0};
  CHECK(no_drift(x, flat).pass);
  CHECK_FALSE(no_drift(x, rising).pass);
  CHECK_FALSE(no_increase(x, rising).pass);
  const std::vector<double> falling{5.0, 4.01, 2.99, 2.02, 1.0};
  CHECK(no_increase(x, falling).pass);
}
