#pragma once

#include "carpetq/word.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace carpetq {

struct Point {
  double x = 0;
  double y = 0;
};

// Draws digit pairs with probabilities p exactly up to 2^-64: each pair owns an integer
// range of the 64-bit output of the generator.
class DigitSampler {
 public:
  explicit DigitSampler(const Carpet& carpet);
  std::uint8_t operator()(std::mt19937_64& rng) const;

 private:
  std::vector<std::uint64_t> upper_;  // exclusive cumulative bounds, last pair takes the rest
};

struct SampledAddress {
  std::vector<std::uint8_t> digits;  // pair indices, one per level
  Point point;

  // The level-k word whose approximate square contains point (k <= depth).
  CarpetWord word(const Carpet& carpet, int k) const;
};

// Derives a per-shard seed so shard streams do not depend on how shards are scheduled.
std::uint64_t shard_seed(std::uint64_t seed, std::uint64_t shard);

SampledAddress sample_address(const Carpet& carpet, int depth, std::mt19937_64& rng);
SampledAddress sample_address(const Carpet& carpet, int depth, std::uint64_t seed);

// Point of a digit sequence: (sum i_h n^-h, sum j_h m^-h).
Point address_point(const Carpet& carpet, const std::uint8_t* digits, int depth);

struct SampleCloud {
  std::vector<double> x;
  std::vector<double> y;
  std::uint64_t seed = 0;
  int depth = 0;

  std::size_t size() const { return x.size(); }
  Point operator[](std::size_t i) const { return {x[i], y[i]}; }
};

inline constexpr std::size_t kShardSize = 65536;

// size >= 1, depth >= 20. Shards of kShardSize points with shard_seed streams.
SampleCloud draw_cloud(const Carpet& carpet, std::size_t size, int depth, std::uint64_t seed,
                       unsigned threads = 0);

struct LocalDimensionStats {
  double mean = 0;
  double stddev = 0;
  std::size_t samples = 0;
};

// Mean and standard deviation of log mu(F_sigma(x, k)) / (-k log m) over sampled x.
LocalDimensionStats local_dimension_estimate(const Carpet& carpet, std::size_t samples, int k,
                                             std::uint64_t seed, unsigned threads = 0);

}  // namespace carpetq
