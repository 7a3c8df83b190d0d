#pragma once

#include "carpetq/kernels.hpp"

namespace carpetq::kernels::detail {

extern const Table scalar_table;
#if defined(CARPETQ_X86)
extern const Table sse2_table;
extern const Table avx2_table;
#endif

// Tail and lane reduction shared by every variant.
inline void scalar_nearest_tail(const double* x, const double* y, std::size_t begin,
                                std::size_t count, double qx, double qy, Nearest& best) {
  for (std::size_t i = begin; i < count; ++i) {
    const double dx = x[i] - qx;
    const double dy = y[i] - qy;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best.d2) best = {i, d2};
  }
}

inline void lane_min(Nearest& best, double d2, std::size_t index) {
  if (d2 < best.d2 || (d2 == best.d2 && index < best.index)) best = {index, d2};
}

struct Lanes {
  double sx[4] = {0, 0, 0, 0};
  double sy[4] = {0, 0, 0, 0};
  double sw[4] = {0, 0, 0, 0};

  void add_tail(const double* x, const double* y, std::size_t begin, std::size_t count,
                double cx, double cy, double floor2) {
    for (std::size_t i = begin; i < count; ++i) {
      const double dx = x[i] - cx;
      const double dy = y[i] - cy;
      double d2 = dx * dx + dy * dy;
      d2 = d2 < floor2 ? floor2 : d2;
      const double w = 1.0 / d2;
      const std::size_t l = i & 3;
      sx[l] += x[i] * w;
      sy[l] += y[i] * w;
      sw[l] += w;
    }
  }
  WeightedSums reduce() const {
    return {(sx[0] + sx[1]) + (sx[2] + sx[3]), (sy[0] + sy[1]) + (sy[2] + sy[3]),
            (sw[0] + sw[1]) + (sw[2] + sw[3])};
  }
};

}  // namespace carpetq::kernels::detail
