#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string_view>

namespace carpetq::kernels {

enum class Isa { scalar, sse2, avx2 };

struct Nearest {
  std::size_t index = std::numeric_limits<std::size_t>::max();  // max() for an empty range
  double d2 = std::numeric_limits<double>::infinity();
};

struct WeightedSums {
  double sx = 0;  // sum x / d2
  double sy = 0;
  double sw = 0;  // sum 1 / d2
};

// Every variant computes d2 = dx*dx + dy*dy with the same operation order and sums in four
// fixed lanes (element i goes to lane i mod 4), so all variants return bit-identical results.
struct Table {
  // First index of the minimum squared distance from (qx, qy) over [0, count).
  Nearest (*nearest)(const double* x, const double* y, std::size_t count, double qx, double qy);
  // Number of points with squared distance <= r2.
  std::size_t (*count_within)(const double* x, const double* y, std::size_t count, double qx,
                              double qy, double r2);
  // Weiszfeld sums with d2 replaced by max(d2, floor2).
  WeightedSums (*weiszfeld)(const double* x, const double* y, std::size_t count, double cx,
                            double cy, double floor2);
};

bool supported(Isa isa);
// Best ISA the CPU supports.
Isa detect();
// detect(), unless CARPETQ_ISA names a supported variant ("scalar", "sse2", "avx2").
Isa active();
const Table& table(Isa isa);
const Table& active_table();

std::string_view name(Isa isa);
std::optional<Isa> parse(std::string_view text);

}  // namespace carpetq::kernels
