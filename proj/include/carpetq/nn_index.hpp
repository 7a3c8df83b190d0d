#pragma once

#include "carpetq/kernels.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace carpetq {

// Exact nearest-point search over a fixed point set through a uniform grid of about
// sqrt(size) cells per axis. Ties go to the lowest original index.
class NearestIndex {
 public:
  NearestIndex(std::span<const double> x, std::span<const double> y);

  std::size_t size() const { return order_.size(); }
  int cells_per_axis() const { return cells_; }
  // Result index refers to the original point order.
  kernels::Nearest nearest(double qx, double qy) const;

 private:
  int cell_x(double v) const;
  int cell_y(double v) const;

  const kernels::Table* kernels_;
  int cells_ = 1;
  double x0_ = 0, y0_ = 0, w_ = 1, h_ = 1;
  std::vector<std::uint32_t> start_;  // cells_^2 + 1 offsets into the sorted arrays
  std::vector<double> sx_, sy_;       // points sorted by cell, original order inside a cell
  std::vector<std::uint32_t> order_;  // sorted position -> original index
};

}  // namespace carpetq
