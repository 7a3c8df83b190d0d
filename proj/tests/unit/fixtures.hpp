#pragma once

#include "carpetq/carpet.hpp"

namespace carpetq::test {

inline MapWeight map(int i, int j, const char* p) { return {{i, j}, parse_rational(p)}; }

// n=4, m=3, three uniform maps.
inline CarpetSpec spec_a() {
  return {4, 3, {map(0, 0, "1/3"), map(0, 2, "1/3"), map(2, 2, "1/3")}};
}
// A single row, so q_max = 1.
inline CarpetSpec spec_b() { return {4, 3, {map(0, 0, "1/2"), map(2, 0, "1/2")}}; }
// n = m, a self-similar case with theta = 1.
inline CarpetSpec spec_c() { return {3, 3, {map(0, 0, "1/2"), map(2, 2, "1/2")}}; }

inline const Carpet& carpet_a() {
  static const Carpet c(spec_a());
  return c;
}
inline const Carpet& carpet_b() {
  static const Carpet c(spec_b());
  return c;
}
inline const Carpet& carpet_c() {
  static const Carpet c(spec_c());
  return c;
}

}  // namespace carpetq::test
