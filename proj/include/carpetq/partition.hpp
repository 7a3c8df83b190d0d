#pragma once

#include "carpetq/parallel.hpp"
#include "carpetq/word_store.hpp"

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace carpetq {

class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnumerationOptions {
  std::size_t cap_words = 10'000'000;  // collect mode only
  unsigned threads = 0;                // 0 = hardware concurrency
};

// The stopping-time partition Lambda_k = { sigma : mu(sigma^flat) >= eta^k > mu(sigma) },
// words in depth-first digit order.
struct PartitionLambdaK {
  int k = 0;
  WordStore words;
  int xi_min = 0;
  int xi_max = 0;
  Rational eta_k;

  std::size_t phi_k() const { return words.size(); }
  CarpetWord word(const Carpet& carpet, std::size_t i) const {
    return CarpetWord::unpack(carpet, words[static_cast<WordStore::Id>(i)]);
  }
};

// What a streaming visitor sees for each emitted word.
struct LambdaWordRef {
  PackedView word;
  int length = 0;
  int ell = 0;
  double log_mass = 0;
};

// A fixed decomposition of the Lambda_k search tree into ordered subtree tasks. The
// decomposition does not depend on the thread count, so concatenating task outputs in
// task order reproduces the sequential depth-first order exactly.
class LambdaPlan {
 public:
  LambdaPlan(const Carpet& carpet, int k);
  ~LambdaPlan();
  LambdaPlan(LambdaPlan&&) noexcept;
  LambdaPlan& operator=(LambdaPlan&&) noexcept;

  std::size_t task_count() const;
  // Longest word the enumeration can emit (from the mass upper bound).
  int length_cap() const;
  // "u64", "u128" or "gmp": the exact integer width chosen for this level.
  std::string arithmetic() const;
  void run(std::size_t task, const std::function<void(const LambdaWordRef&)>& emit) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Collect mode. Throws ResourceLimitError when phi_k exceeds options.cap_words.
PartitionLambdaK enumerate_lambda_k(const Carpet& carpet, int k, const EnumerationOptions& options = {});

// Stream mode, sequential, depth-first order.
void for_each_lambda_k(const Carpet& carpet, int k, const std::function<void(const LambdaWordRef&)>& visit);

// Stream mode, parallel. Acc needs visit(const LambdaWordRef&) and merge(const Acc&); partial
// accumulators are merged in task order.
template <class Acc>
Acc reduce_lambda_k(const Carpet& carpet, int k, unsigned threads, const Acc& init) {
  LambdaPlan plan(carpet, k);
  std::vector<Acc> parts(plan.task_count(), init);
  run_tasks(plan.task_count(), threads, [&](std::size_t t) {
    plan.run(t, [&](const LambdaWordRef& w) { parts[t].visit(w); });
  });
  Acc out = init;
  for (const auto& p : parts) out.merge(p);
  return out;
}

struct BoundCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct PartitionStats {
  int k = 0;
  std::size_t phi_k = 0;
  int xi_min = 0;
  int xi_max = 0;
  Rational mass_sum;
  std::vector<BoundCheck> checks;

  bool all_pass() const;
  const BoundCheck* find(const std::string& name) const;
};

// Exact checks of the partition's defining properties and counting bounds. With
// check_disjoint the open rectangles are also swept for pairwise overlap.
PartitionStats partition_stats(const Carpet& carpet, const PartitionLambdaK& partition,
                               bool check_disjoint = true);

// phi_k <= phi_(k+1) <= eta^-2 phi_k.
BoundCheck check_consecutive(const Carpet& carpet, const PartitionStats& at_k,
                             const PartitionStats& at_k1);

// Sweep-line test that no two rectangles F_sigma share interior points.
BoundCheck check_disjoint_interiors(const Carpet& carpet, const WordStore& words);

// Sum of N / D^len over packed words, exact.
class ExactMassSum {
 public:
  explicit ExactMassSum(const Carpet& carpet) : carpet_(&carpet) {}
  void add(PackedView word);
  void add_weighted(PackedView word, unsigned long weight);
  Rational value() const;

 private:
  const Carpet* carpet_;
  std::vector<BigInt> by_length_;
};

}  // namespace carpetq
