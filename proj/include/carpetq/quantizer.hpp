#pragma once

#include "carpetq/numeric.hpp"
#include "carpetq/partition.hpp"
#include "carpetq/sampler.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace carpetq {

enum class CodebookOrigin { lambda_centers, refined, external };
std::string origin_name(CodebookOrigin origin);

struct Codebook {
  std::vector<double> x;
  std::vector<double> y;
  CodebookOrigin origin = CodebookOrigin::external;

  std::size_t size() const { return x.size(); }
  Point operator[](std::size_t i) const { return {x[i], y[i]}; }
  // Throws std::invalid_argument for an empty point list.
  static Codebook from_points(const std::vector<Point>& points,
                              CodebookOrigin origin = CodebookOrigin::external);
};

// The center of every F_sigma, sigma in Lambda_k, in partition order.
Codebook lambda_codebook(const Carpet& carpet, const PartitionLambdaK& partition);

inline constexpr double kDistanceFloor = 1e-300;

struct DistortionEstimate {
  double estimate = 0;   // mean of log max(d(x, alpha), floor)
  double std_error = 0;  // sample standard deviation / sqrt(N)
  std::size_t samples = 0;
  std::size_t floored = 0;  // samples whose distance fell below the floor
  double floor = kDistanceFloor;
};

// Monte Carlo estimate of the integral of log d(x, alpha) over the cloud. Shard partial
// moments merge in shard order, so the result does not depend on the thread count.
DistortionEstimate log_distortion(const SampleCloud& cloud, const Codebook& codebook,
                                  double floor = kDistanceFloor, unsigned threads = 0);

// m^-(k+5).
double refine_cell_floor(const Carpet& carpet, int k);

struct RefineResult {
  Codebook codebook;               // best iterate, iteration 0 included
  std::vector<double> objective;   // floored distortion of iterate 0..iters
  int best_iteration = 0;
};

// Nearest-point partition of the cloud, then a Weiszfeld-type update of each cell center
// with distances floored at cell_floor. Empty cells keep their center.
RefineResult refine_codebook(const SampleCloud& cloud, const Codebook& codebook, int iters,
                             double cell_floor, unsigned threads = 0);

struct AnchorSums {
  int k = 0;
  std::size_t phi_k = 0;
  int xi_min = 0;
  int xi_max = 0;
  double lower = 0;  // sum mu log m^-|sigma|
  double upper = 0;  // sum mu log |F_sigma|
  double gap_bound = 0;  // log sqrt(n^2 + 1)
  // Every word length h present satisfies m^h < n^(ell(h) + 1), checked on integers, so
  // each per-word gap log(|F| m^h) is at most gap_bound.
  bool gap_exact = false;
};

// Streams Lambda_k once.
AnchorSums compute_anchors(const Carpet& carpet, int k, unsigned threads = 0);

struct QuantOptions {
  int refine_iters = 0;
  std::size_t cap_words = 10'000'000;
  unsigned threads = 0;
};

struct QuantDiagnostics {
  int k = 0;
  std::size_t phi_k = 0;
  double lower_anchor = 0;
  double upper_anchor = 0;
  double e_hat_est = 0;  // lambda codebook, or the refined one when it is better
  double std_error = 0;
  double R_k = 0;        // log(phi_k) / s0 + e_hat_est
  double R_lower = 0;    // log(phi_k) / s0 + lower_anchor
  double R_upper = 0;    // log(phi_k) / s0 + upper_anchor
  double gap_bound = 0;
  bool gap_exact = false;
  bool sandwich = false;  // lambda-codebook estimate <= upper_anchor + 3 std_error
  double lambda_estimate = 0;
  double lambda_std_error = 0;
  std::size_t floored = 0;
  double refined_estimate = std::numeric_limits<double>::quiet_NaN();
  std::size_t cloud_size = 0;

  bool pass() const { return gap_exact && lower_anchor <= upper_anchor && sandwich; }
};

QuantDiagnostics r_k_diagnostic(const Carpet& carpet, int k, const SampleCloud& cloud,
                                const QuantOptions& options = {});
QuantDiagnostics r_k_diagnostic(const Carpet& carpet, int k, std::size_t cloud_size,
                                std::uint64_t seed, int depth = 40,
                                const QuantOptions& options = {});

struct DriftTest {
  LinearFit fit;
  double threshold = 3.0;  // in units of the slope standard error
  bool pass = false;
};
// Two-sided: |slope| < threshold * stderr, or an exactly flat fit.
DriftTest no_drift(std::span<const double> x, std::span<const double> y, double threshold = 3.0);
// One-sided: slope <= 0 or slope < threshold * stderr.
DriftTest no_increase(std::span<const double> x, std::span<const double> y,
                      double threshold = 3.0);

struct BallRow {
  std::size_t center = 0;
  Point x;
  double eps = 0;
  double mass = 0;   // fraction of the cloud in the closed ball
  double sigma = 0;  // sqrt(mass (1 - mass) / N)
  double bound = 0;  // C_ball eps^t
  bool pass = false;  // mass - 3 sigma <= bound
};

struct BallBoundReport {
  bool skipped = false;
  std::string reason;
  double exponent = 0;
  double C_ball = 0;
  std::size_t cloud_size = 0;
  std::vector<BallRow> rows;
  double max_ratio = 0;  // max over rows of mass / (C_ball eps^t)

  bool pass() const;
};

// Centers are drawn from mu with center_seed. Skipped when q_max = 1.
BallBoundReport ball_bound_check(const Carpet& carpet, const SampleCloud& cloud,
                                 std::size_t centers, const std::vector<double>& radii,
                                 std::uint64_t center_seed, unsigned threads = 0);

}  // namespace carpetq
