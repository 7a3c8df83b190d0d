#include "carpetq/quantizer.hpp"

#include "carpetq/kernels.hpp"
#include "carpetq/nn_index.hpp"
#include "carpetq/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace carpetq {

std::string origin_name(CodebookOrigin origin) {
  switch (origin) {
    case CodebookOrigin::lambda_centers:
      return "lambda-centers";
    case CodebookOrigin::refined:
      return "refined";
    default:
      return "external";
  }
}

Codebook Codebook::from_points(const std::vector<Point>& points, CodebookOrigin origin) {
  if (points.empty()) throw std::invalid_argument("a codebook needs at least one point");
  Codebook c;
  c.origin = origin;
  for (const auto& p : points) {
    c.x.push_back(p.x);
    c.y.push_back(p.y);
  }
  return c;
}

Codebook lambda_codebook(const Carpet& carpet, const PartitionLambdaK& partition) {
  if (partition.phi_k() == 0) throw std::invalid_argument("lambda_codebook needs a collected partition");
  Codebook c;
  c.origin = CodebookOrigin::lambda_centers;
  c.x.resize(partition.phi_k());
  c.y.resize(partition.phi_k());
  // Denominators depend only on the word length.
  std::vector<BigInt> den_x, den_y;
  for (std::size_t i = 0; i < partition.phi_k(); ++i) {
    const auto cell = packed::grid_cell(carpet, partition.words[static_cast<WordStore::Id>(i)]);
    if (static_cast<std::size_t>(cell.k) >= den_x.size()) {
      for (int h = static_cast<int>(den_x.size()); h <= cell.k; ++h) {
        den_x.push_back(2 * pow(BigInt(carpet.n()), static_cast<unsigned>(carpet.ell(h))));
        den_y.push_back(2 * pow(BigInt(carpet.m()), static_cast<unsigned>(h)));
      }
    }
    c.x[i] = to_double(Rational(2 * cell.x + 1, den_x[cell.k]));
    c.y[i] = to_double(Rational(2 * cell.y + 1, den_y[cell.k]));
  }
  return c;
}

namespace {

// Nearest-center pass over the cloud: floored log-distance moments and, optionally, the
// nearest index of every sample.
DistortionEstimate assign(const SampleCloud& cloud, const Codebook& codebook, double floor,
                          unsigned threads, std::vector<std::uint32_t>* labels) {
  if (cloud.size() == 0) throw std::invalid_argument("log_distortion needs a nonempty cloud");
  if (codebook.size() == 0) throw std::invalid_argument("log_distortion needs a nonempty codebook");
  if (!(floor > 0)) throw std::invalid_argument("distance floor must be positive");
  const NearestIndex index(codebook.x, codebook.y);
  if (labels) labels->assign(cloud.size(), 0);
  const std::size_t shards = (cloud.size() + kShardSize - 1) / kShardSize;
  std::vector<RunningMoments> moments(shards);
  std::vector<std::size_t> floored(shards, 0);
  run_tasks(shards, threads, [&](std::size_t s) {
    const std::size_t end = std::min(cloud.size(), (s + 1) * kShardSize);
    for (std::size_t i = s * kShardSize; i < end; ++i) {
      const auto hit = index.nearest(cloud.x[i], cloud.y[i]);
      if (labels) (*labels)[i] = static_cast<std::uint32_t>(hit.index);
      double d = std::sqrt(hit.d2);
      if (d < floor) {
        d = floor;
        ++floored[s];
      }
      moments[s].add(std::log(d));
    }
  });
  RunningMoments all;
  DistortionEstimate out;
  for (std::size_t s = 0; s < shards; ++s) {
    all.merge(moments[s]);
    out.floored += floored[s];
  }
  out.estimate = all.mean();
  out.samples = all.count();
  out.std_error = std::sqrt(all.variance() / static_cast<double>(all.count()));
  out.floor = floor;
  return out;
}

}  // namespace

DistortionEstimate log_distortion(const SampleCloud& cloud, const Codebook& codebook, double floor,
                                  unsigned threads) {
  return assign(cloud, codebook, floor, threads, nullptr);
}

double refine_cell_floor(const Carpet& carpet, int k) {
  return std::pow(static_cast<double>(carpet.m()), -static_cast<double>(k + 5));
}

RefineResult refine_codebook(const SampleCloud& cloud, const Codebook& codebook, int iters,
                             double cell_floor, unsigned threads) {
  if (iters < 0) throw std::invalid_argument("refine_codebook needs iters >= 0");
  RefineResult result;
  result.codebook = codebook;
  Codebook current = codebook;
  const double floor2 = cell_floor * cell_floor;
  const auto& kern = kernels::active_table();
  std::vector<std::uint32_t> labels;
  std::vector<std::uint32_t> start(codebook.size() + 1);
  std::vector<double> px(cloud.size()), py(cloud.size());
  for (int it = 0;; ++it) {
    const auto est = assign(cloud, current, cell_floor, threads, &labels);
    result.objective.push_back(est.estimate);
    if (est.estimate < result.objective[result.best_iteration] || it == 0) {
      result.best_iteration = it;
      result.codebook = current;
    }
    if (it == iters) break;
    // Group samples by cell, keeping cloud order inside each cell.
    std::fill(start.begin(), start.end(), 0);
    for (auto l : labels) ++start[l + 1];
    for (std::size_t c = 0; c < current.size(); ++c) start[c + 1] += start[c];
    std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const std::uint32_t pos = fill[labels[i]]++;
      px[pos] = cloud.x[i];
      py[pos] = cloud.y[i];
    }
    Codebook next = current;
    next.origin = CodebookOrigin::refined;
    const std::size_t chunk = 4096;
    const std::size_t tasks = (current.size() + chunk - 1) / chunk;
    run_tasks(tasks, threads, [&](std::size_t t) {
      const std::size_t end = std::min(current.size(), (t + 1) * chunk);
      for (std::size_t c = t * chunk; c < end; ++c) {
        const std::uint32_t b = start[c], e = start[c + 1];
        if (b == e) continue;
        const auto s = kern.weiszfeld(px.data() + b, py.data() + b, e - b, current.x[c],
                                      current.y[c], floor2);
        next.x[c] = s.sx / s.sw;
        next.y[c] = s.sy / s.sw;
      }
    });
    current = std::move(next);
  }
  return result;
}

namespace {

struct AnchorAcc {
  std::vector<CompensatedSum> mass;  // by word length
  std::size_t count = 0;
  int xi_min = std::numeric_limits<int>::max();
  int xi_max = 0;

  void visit(const LambdaWordRef& w) {
    if (static_cast<std::size_t>(w.length) >= mass.size()) mass.resize(w.length + 1);
    mass[w.length].add(std::exp(w.log_mass));
    ++count;
    xi_min = std::min(xi_min, w.length);
    xi_max = std::max(xi_max, w.length);
  }
  void merge(const AnchorAcc& o) {
    if (o.mass.size() > mass.size()) mass.resize(o.mass.size());
    for (std::size_t h = 0; h < o.mass.size(); ++h) mass[h].merge(o.mass[h]);
    count += o.count;
    xi_min = std::min(xi_min, o.xi_min);
    xi_max = std::max(xi_max, o.xi_max);
  }
};

}  // namespace

AnchorSums compute_anchors(const Carpet& carpet, int k, unsigned threads) {
  const auto acc = reduce_lambda_k(carpet, k, threads, AnchorAcc{});
  const double log_m = std::log(static_cast<double>(carpet.m()));
  const double log_n = std::log(static_cast<double>(carpet.n()));
  AnchorSums a;
  a.k = k;
  a.phi_k = acc.count;
  a.xi_min = acc.xi_min;
  a.xi_max = acc.xi_max;
  a.gap_bound = 0.5 * std::log(static_cast<double>(carpet.n()) * carpet.n() + 1.0);
  a.gap_exact = true;
  CompensatedSum lower, upper;
  for (std::size_t h = 1; h < acc.mass.size(); ++h) {
    const double M = acc.mass[h].value();
    if (M == 0) continue;
    const int l = carpet.ell(static_cast<int>(h));
    const BigInt mh = pow(BigInt(carpet.m()), static_cast<unsigned>(h));
    const BigInt nl = pow(BigInt(carpet.n()), static_cast<unsigned>(l));
    if (!(nl <= mh && mh < nl * carpet.n())) a.gap_exact = false;
    // |F| = m^-h sqrt(1 + (m^h / n^l)^2).
    const double r = std::exp(static_cast<double>(h) * log_m - l * log_n);
    const double scale = -static_cast<double>(h) * log_m;
    lower.add(M * scale);
    upper.add(M * (scale + 0.5 * std::log1p(r * r)));
  }
  a.lower = lower.value();
  a.upper = upper.value();
  return a;
}

QuantDiagnostics r_k_diagnostic(const Carpet& carpet, int k, const SampleCloud& cloud,
                                const QuantOptions& options) {
  QuantDiagnostics d;
  d.k = k;
  d.cloud_size = cloud.size();
  const auto part = enumerate_lambda_k(carpet, k, {options.cap_words, options.threads});
  const auto anchors = compute_anchors(carpet, k, options.threads);
  d.phi_k = part.phi_k();
  d.lower_anchor = anchors.lower;
  d.upper_anchor = anchors.upper;
  d.gap_bound = anchors.gap_bound;
  d.gap_exact = anchors.gap_exact;

  const auto codebook = lambda_codebook(carpet, part);
  const auto est = log_distortion(cloud, codebook, kDistanceFloor, options.threads);
  d.lambda_estimate = est.estimate;
  d.lambda_std_error = est.std_error;
  d.floored = est.floored;
  d.sandwich = est.estimate <= anchors.upper + 3.0 * est.std_error;
  d.e_hat_est = est.estimate;
  d.std_error = est.std_error;
  if (options.refine_iters > 0) {
    const auto refined = refine_codebook(cloud, codebook, options.refine_iters,
                                         refine_cell_floor(carpet, k), options.threads);
    const auto r = log_distortion(cloud, refined.codebook, kDistanceFloor, options.threads);
    d.refined_estimate = r.estimate;
    if (r.estimate < d.e_hat_est) {
      d.e_hat_est = r.estimate;
      d.std_error = r.std_error;
      d.floored = r.floored;
    }
  }
  const double log_phi = std::log(static_cast<double>(d.phi_k)) / carpet.params().s0;
  d.R_k = log_phi + d.e_hat_est;
  d.R_lower = log_phi + d.lower_anchor;
  d.R_upper = log_phi + d.upper_anchor;
  return d;
}

QuantDiagnostics r_k_diagnostic(const Carpet& carpet, int k, std::size_t cloud_size,
                                std::uint64_t seed, int depth, const QuantOptions& options) {
  const auto cloud = draw_cloud(carpet, cloud_size, depth, seed, options.threads);
  return r_k_diagnostic(carpet, k, cloud, options);
}

DriftTest no_drift(std::span<const double> x, std::span<const double> y, double threshold) {
  DriftTest t;
  t.fit = least_squares(x, y);
  t.threshold = threshold;
  // An exactly flat series has a zero standard error.
  t.pass = t.fit.slope == 0 || std::abs(t.fit.slope) < threshold * t.fit.slope_stderr;
  return t;
}

DriftTest no_increase(std::span<const double> x, std::span<const double> y, double threshold) {
  DriftTest t;
  t.fit = least_squares(x, y);
  t.threshold = threshold;
  t.pass = t.fit.slope <= 0 || t.fit.slope < threshold * t.fit.slope_stderr;
  return t;
}

bool BallBoundReport::pass() const {
  if (skipped) return true;
  return std::all_of(rows.begin(), rows.end(), [](const BallRow& r) { return r.pass; });
}

BallBoundReport ball_bound_check(const Carpet& carpet, const SampleCloud& cloud,
                                 std::size_t centers, const std::vector<double>& radii,
                                 std::uint64_t center_seed, unsigned threads) {
  BallBoundReport rep;
  const auto& P = carpet.params();
  rep.exponent = P.ball_exponent;
  rep.C_ball = P.C_ball;
  rep.cloud_size = cloud.size();
  if (P.q_max == 1) {
    rep.skipped = true;
    rep.reason = "q_max = 1, so the ball exponent is 0";
    return rep;
  }
  if (cloud.size() == 0) throw std::invalid_argument("ball_bound_check needs a nonempty cloud");
  std::mt19937_64 rng(center_seed);
  std::vector<Point> xs;
  for (std::size_t c = 0; c < centers; ++c) {
    xs.push_back(sample_address(carpet, std::max(cloud.depth, 20), rng).point);
  }
  rep.rows.resize(centers * radii.size());
  const auto& kern = kernels::active_table();
  const double N = static_cast<double>(cloud.size());
  run_tasks(centers, threads, [&](std::size_t c) {
    for (std::size_t r = 0; r < radii.size(); ++r) {
      BallRow& row = rep.rows[c * radii.size() + r];
      row.center = c;
      row.x = xs[c];
      row.eps = radii[r];
      const auto hits = kern.count_within(cloud.x.data(), cloud.y.data(), cloud.size(), xs[c].x,
                                          xs[c].y, radii[r] * radii[r]);
      row.mass = static_cast<double>(hits) / N;
      row.sigma = std::sqrt(row.mass * (1.0 - row.mass) / N);
      row.bound = P.C_ball * std::pow(radii[r], P.ball_exponent);
      row.pass = row.mass - 3.0 * row.sigma <= row.bound;
    }
  });
  for (const auto& row : rep.rows) rep.max_ratio = std::max(rep.max_ratio, row.mass / row.bound);
  return rep;
}

}  // namespace carpetq
