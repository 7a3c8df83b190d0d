#include "kernels_impl.hpp"

#include <immintrin.h>

namespace carpetq::kernels::detail {
namespace {

Nearest nearest(const double* x, const double* y, std::size_t count, double qx, double qy) {
  const __m256d vqx = _mm256_set1_pd(qx), vqy = _mm256_set1_pd(qy);
  __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  __m256d best_i = _mm256_set1_pd(-1.0);
  __m256d idx = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  const __m256d step = _mm256_set1_pd(4.0);
  const std::size_t body = count & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x + i), vqx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y + i), vqy);
    const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    const __m256d lt = _mm256_cmp_pd(d2, best, _CMP_LT_OQ);
    best = _mm256_blendv_pd(best, d2, lt);
    best_i = _mm256_blendv_pd(best_i, idx, lt);
    idx = _mm256_add_pd(idx, step);
  }
  alignas(32) double d[4], ix[4];
  _mm256_store_pd(d, best);
  _mm256_store_pd(ix, best_i);
  Nearest out;
  for (int l = 0; l < 4; ++l) {
    if (ix[l] >= 0) lane_min(out, d[l], static_cast<std::size_t>(ix[l]));
  }
  scalar_nearest_tail(x, y, body, count, qx, qy, out);
  return out;
}

std::size_t count_within(const double* x, const double* y, std::size_t count, double qx,
                         double qy, double r2) {
  const __m256d vqx = _mm256_set1_pd(qx), vqy = _mm256_set1_pd(qy), vr = _mm256_set1_pd(r2);
  std::size_t c = 0;
  const std::size_t body = count & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x + i), vqx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y + i), vqy);
    const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    c += static_cast<std::size_t>(
        __builtin_popcount(_mm256_movemask_pd(_mm256_cmp_pd(d2, vr, _CMP_LE_OQ))));
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
  const __m256d vcx = _mm256_set1_pd(cx), vcy = _mm256_set1_pd(cy), vf = _mm256_set1_pd(floor2);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d sx = _mm256_setzero_pd(), sy = _mm256_setzero_pd(), sw = _mm256_setzero_pd();
  const std::size_t body = count & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i), vy = _mm256_loadu_pd(y + i);
    const __m256d dx = _mm256_sub_pd(vx, vcx);
    const __m256d dy = _mm256_sub_pd(vy, vcy);
    const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    const __m256d lt = _mm256_cmp_pd(d2, vf, _CMP_LT_OQ);
    const __m256d w = _mm256_div_pd(one, _mm256_blendv_pd(d2, vf, lt));
    sx = _mm256_add_pd(sx, _mm256_mul_pd(vx, w));
    sy = _mm256_add_pd(sy, _mm256_mul_pd(vy, w));
    sw = _mm256_add_pd(sw, w);
  }
  Lanes lanes;
  _mm256_storeu_pd(lanes.sx, sx);
  _mm256_storeu_pd(lanes.sy, sy);
  _mm256_storeu_pd(lanes.sw, sw);
  lanes.add_tail(x, y, body, count, cx, cy, floor2);
  return lanes.reduce();
}

}  // namespace

const Table avx2_table{nearest, count_within, weiszfeld};

}  // namespace carpetq::kernels::detail
