#include "carpetq/nn_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace carpetq {

NearestIndex::NearestIndex(std::span<const double> x, std::span<const double> y)
    : kernels_(&kernels::active_table()) {
  if (x.size() != y.size() || x.empty()) {
    throw std::invalid_argument("nearest index needs a nonempty point set");
  }
  if (x.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("nearest index holds at most 2^32 - 1 points");
  }
  const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  cells_ = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(x.size())))));
  x0_ = *xmin;
  y0_ = *ymin;
  w_ = std::max((*xmax - x0_) / cells_, 1e-300);
  h_ = std::max((*ymax - y0_) / cells_, 1e-300);

  const std::size_t ncell = static_cast<std::size_t>(cells_) * cells_;
  std::vector<std::uint32_t> cell_of(x.size());
  start_.assign(ncell + 1, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    cell_of[i] = static_cast<std::uint32_t>(cell_y(y[i]) * cells_ + cell_x(x[i]));
    ++start_[cell_of[i] + 1];
  }
  for (std::size_t c = 0; c < ncell; ++c) start_[c + 1] += start_[c];
  std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
  sx_.resize(x.size());
  sy_.resize(x.size());
  order_.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::uint32_t pos = fill[cell_of[i]]++;
    sx_[pos] = x[i];
    sy_[pos] = y[i];
    order_[pos] = static_cast<std::uint32_t>(i);
  }
}

int NearestIndex::cell_x(double v) const {
  const double c = std::floor((v - x0_) / w_);
  return static_cast<int>(std::clamp(c, 0.0, static_cast<double>(cells_ - 1)));
}

int NearestIndex::cell_y(double v) const {
  const double c = std::floor((v - y0_) / h_);
  return static_cast<int>(std::clamp(c, 0.0, static_cast<double>(cells_ - 1)));
}

kernels::Nearest NearestIndex::nearest(double qx, double qy) const {
  const int cx = cell_x(qx), cy = cell_y(qy);
  const double inf = std::numeric_limits<double>::infinity();
  kernels::Nearest best;
  auto scan = [&](int gx, int gy) {
    const std::size_t c = static_cast<std::size_t>(gy) * cells_ + gx;
    const std::uint32_t b = start_[c], e = start_[c + 1];
    if (b == e) return;
    const auto r = kernels_->nearest(sx_.data() + b, sy_.data() + b, e - b, qx, qy);
    const std::size_t orig = order_[b + r.index];
    if (r.d2 < best.d2 || (r.d2 == best.d2 && orig < best.index)) best = {orig, r.d2};
  };
  for (int r = 0;; ++r) {
    const int lx = cx - r, hx = cx + r, ly = cy - r, hy = cy + r;
    for (int gy = std::max(ly, 0); gy <= std::min(hy, cells_ - 1); ++gy) {
      const bool edge_row = gy == ly || gy == hy;
      for (int gx = std::max(lx, 0); gx <= std::min(hx, cells_ - 1); ++gx) {
        if (edge_row || gx == lx || gx == hx) scan(gx, gy);
      }
    }
    const bool done = lx <= 0 && ly <= 0 && hx >= cells_ - 1 && hy >= cells_ - 1;
    if (done) break;
    // Distance from the query to the outside of the searched block; sides at the grid
    // boundary hold no further points.
    double margin = inf;
    if (lx > 0) margin = std::min(margin, qx - (x0_ + lx * w_));
    if (hx < cells_ - 1) margin = std::min(margin, x0_ + (hx + 1) * w_ - qx);
    if (ly > 0) margin = std::min(margin, qy - (y0_ + ly * h_));
    if (hy < cells_ - 1) margin = std::min(margin, y0_ + (hy + 1) * h_ - qy);
    margin = std::max(margin, 0.0);
    // Keep searching through exact ties and rounding of the cell edges.
    if (best.d2 < margin * margin * (1.0 - 1e-9)) break;
  }
  return best;
}

}  // namespace carpetq
