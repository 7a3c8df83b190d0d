#include "kernels_impl.hpp"

#include <cstdlib>
#include <string>

namespace carpetq::kernels {
namespace detail {
namespace {

Nearest nearest(const double* x, const double* y, std::size_t count, double qx, double qy) {
  Nearest best;
  scalar_nearest_tail(x, y, 0, count, qx, qy, best);
  return best;
}

std::size_t count_within(const double* x, const double* y, std::size_t count, double qx,
                         double qy, double r2) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double dx = x[i] - qx;
    const double dy = y[i] - qy;
    c += (dx * dx + dy * dy <= r2) ? 1 : 0;
  }
  return c;
}

WeightedSums weiszfeld(const double* x, const double* y, std::size_t count, double cx, double cy,
                       double floor2) {
  Lanes lanes;
  lanes.add_tail(x, y, 0, count, cx, cy, floor2);
  return lanes.reduce();
}

}  // namespace

const Table scalar_table{nearest, count_within, weiszfeld};

}  // namespace detail

bool supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
#if defined(CARPETQ_X86)
    case Isa::sse2:
      return true;
    case Isa::avx2:
      return __builtin_cpu_supports("avx2");
#endif
    default:
      return false;
  }
}

Isa detect() {
  if (supported(Isa::avx2)) return Isa::avx2;
  if (supported(Isa::sse2)) return Isa::sse2;
  return Isa::scalar;
}

Isa active() {
  static const Isa isa = [] {
    if (const char* env = std::getenv("CARPETQ_ISA")) {
      if (auto want = parse(env); want && supported(*want)) return *want;
    }
    return detect();
  }();
  return isa;
}

const Table& table(Isa isa) {
  switch (isa) {
#if defined(CARPETQ_X86)
    case Isa::sse2:
      return detail::sse2_table;
    case Isa::avx2:
      return supported(Isa::avx2) ? detail::avx2_table : detail::sse2_table;
#endif
    default:
      return detail::scalar_table;
  }
}

const Table& active_table() { return table(active()); }

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::sse2:
      return "sse2";
    case Isa::avx2:
      return "avx2";
    default:
      return "scalar";
  }
}

std::optional<Isa> parse(std::string_view text) {
  if (text == "scalar") return Isa::scalar;
  if (text == "sse2") return Isa::sse2;
  if (text == "avx2") return Isa::avx2;
  return std::nullopt;
}

}  // namespace carpetq::kernels
