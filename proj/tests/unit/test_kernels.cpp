#include "carpetq/kernels.hpp"
#include "carpetq/nn_index.hpp"

#include <doctest.h>

#include <cstring>
#include <random>
#include <stdexcept>
#include <vector>

using namespace carpetq;
using namespace carpetq::kernels;

namespace {

std::vector<Isa> available() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::sse2, Isa::avx2}) {
    if (supported(isa)) out.push_back(isa);
  }
  return out;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

struct Points {
  std::vector<double> x, y;
};

// Coordinates on a coarse lattice so that exact distance ties are common.
Points lattice_points(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 8);
  Points p;
  for (std::size_t i = 0; i < count; ++i) {
    p.x.push_back(u(rng) / 8.0);
    p.y.push_back(u(rng) / 8.0);
  }
  return p;
}

Points uniform_points(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Points p;
  for (std::size_t i = 0; i < count; ++i) {
    p.x.push_back(u(rng));
    p.y.push_back(u(rng));
  }
  return p;
}

}  // namespace

TEST_CASE("isa names round trip and scalar is always available") {
  CHECK(supported(Isa::scalar));
  for (Isa isa : {Isa::scalar, Isa::sse2, Isa::avx2}) CHECK(parse(name(isa)) == isa);
  CHECK_FALSE(parse("neon").has_value());
  CHECK(supported(active()));
}

TEST_CASE("simd kernels are bit-identical to scalar") {
  const auto& ref = table(Isa::scalar);
  for (Isa isa : available()) {
    CAPTURE(name(isa));
    const auto& t = table(isa);
    for (std::size_t count = 0; count <= 37; ++count) {
      for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const Points p = seed % 2 ? lattice_points(count, seed) : uniform_points(count, seed);
        const double qx = 0.3 + 0.1 * seed, qy = 0.5;
        const auto a = ref.nearest(p.x.data(), p.y.data(), count, qx, qy);
        const auto b = t.nearest(p.x.data(), p.y.data(), count, qx, qy);
        CHECK(a.index == b.index);
        CHECK(same_bits(a.d2, b.d2));
        for (double r2 : {0.0, 0.015625, 0.1, 2.0}) {
          CHECK(ref.count_within(p.x.data(), p.y.data(), count, qx, qy, r2) ==
                t.count_within(p.x.data(), p.y.data(), count, qx, qy, r2));
        }
        const auto wa = ref.weiszfeld(p.x.data(), p.y.data(), count, qx, qy, 1e-6);
        const auto wb = t.weiszfeld(p.x.data(), p.y.data(), count, qx, qy, 1e-6);
        CHECK(same_bits(wa.sx, wb.sx));
        CHECK(same_bits(wa.sy, wb.sy));
        CHECK(same_bits(wa.sw, wb.sw));
      }
    }
  }
}

TEST_CASE("nearest picks the lowest index among ties") {
  const std::vector<double> x{1, 0, 1, 0, 0.5, 0.5, 0.5, 0.5, 0.5};
  const std::vector<double> y{0, 1, 0, 1, 0.0, 0.0, 0.0, 0.0, 0.0};
  for (Isa isa : available()) {
    const auto r = table(isa).nearest(x.data(), y.data(), x.size(), 0.5, 0.5);
    CHECK(r.index == 4);
    CHECK(r.d2 == 0.25);
  }
  CHECK(table(Isa::scalar).nearest(x.data(), y.data(), 0, 0, 0).index ==
        Nearest{}.index);
}

TEST_CASE("grid index agrees with brute force") {
  const auto& ref = table(Isa::scalar);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (std::size_t count : {1u, 2u, 17u, 400u}) {
      const Points book = seed == 1 ? lattice_points(count, seed) : uniform_points(count, seed);
      const NearestIndex index(book.x, book.y);
      const Points queries = seed == 1 ? lattice_points(500, seed + 10)
                                       : uniform_points(500, seed + 10);
      for (std::size_t i = 0; i < queries.x.size(); ++i) {
        // Queries also reach outside the codebook's bounding box.
        const double qx = queries.x[i] * 1.4 - 0.2, qy = queries.y[i] * 1.4 - 0.2;
        const auto want = ref.nearest(book.x.data(), book.y.data(), count, qx, qy);
        const auto got = index.nearest(qx, qy);
        CHECK(got.index == want.index);
        CHECK(got.d2 == want.d2);
      }
    }
  }
}

TEST_CASE("grid index handles a degenerate bounding box") {
  const std::vector<double> x(5, 0.25), y(5, 0.75);
  const NearestIndex index(x, y);
  const auto r = index.nearest(0.9, 0.1);
  CHECK(r.index == 0);
  CHECK_THROWS_AS(NearestIndex({}, {}), std::invalid_argument);
}
