#include "kernels_impl.hpp"

#include <emmintrin.h>

namespace carpetq::kernels::detail {
namespace {

Nearest nearest(const double* x, const double* y, std::size_t count, double qx, double qy) {
  const __m128d vqx = _mm_set1_pd(qx), vqy = _mm_set1_pd(qy);
  __m128d best = _mm_set1_pd(std::numeric_limits<double>::infinity());
  // Indices kept as doubles: exact below 2^53.
  __m128d best_i = _mm_set1_pd(-1.0);
  __m128d idx = _mm_set_pd(1.0, 0.0);
  const __m128d step = _mm_set1_pd(2.0);
  const std::size_t body = count & ~std::size_t{1};
  for (std::size_t i = 0; i < body; i += 2) {
    const __m128d dx = _mm_sub_pd(_mm_loadu_pd(x + i), vqx);
    const __m128d dy = _mm_sub_pd(_mm_loadu_pd(y + i), vqy);
    const __m128d d2 = _mm_add_pd(_mm_mul_pd(dx, dx), _mm_mul_pd(dy, dy));
    const __m128d lt = _mm_cmplt_pd(d2, best);
    best = _mm_or_pd(_mm_and_pd(lt, d2), _mm_andnot_pd(lt, best));
    best_i = _mm_or_pd(_mm_and_pd(lt, idx), _mm_andnot_pd(lt, best_i));
    idx = _mm_add_pd(idx, step);
  }
  alignas(16) double d[2], ix[2];
  _mm_store_pd(d, best);
  _mm_store_pd(ix, best_i);
  Nearest out;
  for (int l = 0; l < 2; ++l) {
    if (ix[l] >= 0) lane_min(out, d[l], static_cast<std::size_t>(ix[l]));
  }
  scalar_nearest_tail(x, y, body, count, qx, qy, out);
  return out;
}

std::size_t count_within(const double* x, const double* y, std::size_t count, double qx,
                         double qy, double r2) {
  const __m128d vqx = _mm_set1_pd(qx), vqy = _mm_set1_pd(qy), vr = _mm_set1_pd(r2);
  std::size_t c = 0;
  const std::size_t body = count & ~std::size_t{1};
  for (std::size_t i = 0; i < body; i += 2) {
    const __m128d dx = _mm_sub_pd(_mm_loadu_pd(x + i), vqx);
    const __m128d dy = _mm_sub_pd(_mm_loadu_pd(y + i), vqy);
    const __m128d d2 = _mm_add_pd(_mm_mul_pd(dx, dx), _mm_mul_pd(dy, dy));
    c += static_cast<std::size_t>(__builtin_popcount(_mm_movemask_pd(_mm_cmple_pd(d2, vr))));
  }
  for (std::size_t i = body; i < count; ++i) {
    const double dx = x[i] - qx;
    const double dy = y[i] - qy;
    c += (dx * dx + dy * dy <= r2) ? 1 : 0;
  }
  return c;
}

WeightedSums weiszfeld(const double* x, const double* y, std::size_t count, double cx, double cy,
                       double floor2) {
  const __m128d vcx = _mm_set1_pd(cx), vcy = _mm_set1_pd(cy), vf = _mm_set1_pd(floor2);
  const __m128d one = _mm_set1_pd(1.0);
  // Lanes 0,1 in lo and lanes 2,3 in hi.
  __m128d sx_lo = _mm_setzero_pd(), sx_hi = _mm_setzero_pd();
  __m128d sy_lo = _mm_setzero_pd(), sy_hi = _mm_setzero_pd();
  __m128d sw_lo = _mm_setzero_pd(), sw_hi = _mm_setzero_pd();
  auto step = [&](const double* px, const double* py, __m128d& sx, __m128d& sy, __m128d& sw) {
    const __m128d vx = _mm_loadu_pd(px), vy = _mm_loadu_pd(py);
    const __m128d dx = _mm_sub_pd(vx, vcx);
    const __m128d dy = _mm_sub_pd(vy, vcy);
    const __m128d d2 = _mm_add_pd(_mm_mul_pd(dx, dx), _mm_mul_pd(dy, dy));
    const __m128d lt = _mm_cmplt_pd(d2, vf);
    const __m128d w = _mm_div_pd(one, _mm_or_pd(_mm_and_pd(lt, vf), _mm_andnot_pd(lt, d2)));
    sx = _mm_add_pd(sx, _mm_mul_pd(vx, w));
    sy = _mm_add_pd(sy, _mm_mul_pd(vy, w));
    sw = _mm_add_pd(sw, w);
  };
  const std::size_t body = count & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    step(x + i, y + i, sx_lo, sy_lo, sw_lo);
    step(x + i + 2, y + i + 2, sx_hi, sy_hi, sw_hi);
  }
  Lanes lanes;
  _mm_storeu_pd(lanes.sx, sx_lo);
  _mm_storeu_pd(lanes.sx + 2, sx_hi);
  _mm_storeu_pd(lanes.sy, sy_lo);
  _mm_storeu_pd(lanes.sy + 2, sy_hi);
  _mm_storeu_pd(lanes.sw, sw_lo);
  _mm_storeu_pd(lanes.sw + 2, sw_hi);
  lanes.add_tail(x, y, body, count, cx, cy, floor2);
  return lanes.reduce();
}

}  // namespace

const Table sse2_table{nearest, count_within, weiszfeld};

}  // namespace carpetq::kernels::detail
