#include "carpetq/sampler.hpp"

#include "carpetq/numeric.hpp"
#include "carpetq/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace carpetq {

DigitSampler::DigitSampler(const Carpet& carpet) {
  // upper_[g] = floor(2^64 * (p_0 + ... + p_g)) for all but the last pair.
  const BigInt two64 = BigInt(1) << 64;
  Rational cum = 0;
  for (std::size_t g = 0; g + 1 < carpet.num_pairs(); ++g) {
    cum += carpet.p(static_cast<std::uint8_t>(g));
    BigInt t = cum.get_num() * two64;
    mpz_fdiv_q(t.get_mpz_t(), t.get_mpz_t(), cum.get_den_mpz_t());
    upper_.push_back(to_u64(t));
  }
}

std::uint8_t DigitSampler::operator()(std::mt19937_64& rng) const {
  const std::uint64_t u = rng();
  std::uint8_t g = 0;
  while (g < upper_.size() && u >= upper_[g]) ++g;
  return g;
}

CarpetWord SampledAddress::word(const Carpet& carpet, int k) const {
  if (k < 1 || k > static_cast<int>(digits.size())) {
    throw std::invalid_argument("level " + std::to_string(k) + " outside the sampled depth");
  }
  const int l = carpet.ell(k);
  PackedWord w(digits.begin(), digits.begin() + k);
  for (int h = l; h < k; ++h) w[h] = carpet.row_of_pair(w[h]);
  return CarpetWord::unpack(carpet, w);
}

std::uint64_t shard_seed(std::uint64_t seed, std::uint64_t shard) {
  // splitmix64 applied twice.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return mix(seed ^ mix(shard));
}

Point address_point(const Carpet& carpet, const std::uint8_t* digits, int depth) {
  const double n = carpet.n(), m = carpet.m();
  double x = 0, y = 0;
  for (int h = depth - 1; h >= 0; --h) {
    const auto& d = carpet.pair_at(digits[h]);
    x = (x + d.i) / n;
    y = (y + d.j) / m;
  }
  return {x, y};
}

SampledAddress sample_address(const Carpet& carpet, int depth, std::mt19937_64& rng) {
  if (depth < 1) throw std::invalid_argument("sample depth must be at least 1");
  const DigitSampler draw(carpet);
  SampledAddress a;
  a.digits.resize(depth);
  for (auto& g : a.digits) g = draw(rng);
  a.point = address_point(carpet, a.digits.data(), depth);
  return a;
}

SampledAddress sample_address(const Carpet& carpet, int depth, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_address(carpet, depth, rng);
}

SampleCloud draw_cloud(const Carpet& carpet, std::size_t size, int depth, std::uint64_t seed,
                       unsigned threads) {
  if (size < 1) throw std::invalid_argument("cloud size must be at least 1");
  if (depth < 20) throw std::invalid_argument("cloud depth must be at least 20");
  SampleCloud cloud;
  cloud.seed = seed;
  cloud.depth = depth;
  cloud.x.resize(size);
  cloud.y.resize(size);
  const DigitSampler draw(carpet);
  const std::size_t shards = (size + kShardSize - 1) / kShardSize;
  run_tasks(shards, threads, [&](std::size_t s) {
    std::mt19937_64 rng(shard_seed(seed, s));
    std::vector<std::uint8_t> digits(depth);
    const std::size_t end = std::min(size, (s + 1) * kShardSize);
    for (std::size_t i = s * kShardSize; i < end; ++i) {
      for (auto& g : digits) g = draw(rng);
      const Point p = address_point(carpet, digits.data(), depth);
      cloud.x[i] = p.x;
      cloud.y[i] = p.y;
    }
  });
  return cloud;
}

LocalDimensionStats local_dimension_estimate(const Carpet& carpet, std::size_t samples, int k,
                                             std::uint64_t seed, unsigned threads) {
  if (k < 1) throw std::invalid_argument("level must be at least 1");
  if (samples < 1) throw std::invalid_argument("sample count must be at least 1");
  const DigitSampler draw(carpet);
  const int l = carpet.ell(k);
  const double scale = -static_cast<double>(k) * std::log(static_cast<double>(carpet.m()));
  const std::size_t shards = (samples + kShardSize - 1) / kShardSize;
  std::vector<RunningMoments> parts(shards);
  run_tasks(shards, threads, [&](std::size_t s) {
    std::mt19937_64 rng(shard_seed(seed, s));
    const std::size_t end = std::min(samples, (s + 1) * kShardSize);
    for (std::size_t i = s * kShardSize; i < end; ++i) {
      double acc = 0;
      for (int h = 0; h < k; ++h) {
        const std::uint8_t g = draw(rng);
        acc += h < l ? carpet.log_p(g) : carpet.log_q(carpet.row_of_pair(g));
      }
      parts[s].add(acc / scale);
    }
  });
  RunningMoments all;
  for (const auto& p : parts) all.merge(p);
  return {all.mean(), std::sqrt(all.variance()), all.count()};
}

}  // namespace carpetq
