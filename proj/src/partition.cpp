#include "carpetq/partition.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <variant>

namespace carpetq {

namespace {

using u128 = unsigned __int128;

constexpr std::size_t kTargetTasks = 256;
constexpr int kMaxExpansionRounds = 64;

// Exact integer operations for each width tier.
inline void scale(std::uint64_t& out, const std::uint64_t& in, std::uint64_t div, std::uint64_t mul) {
  out = in / div * mul;
}
inline void scale(u128& out, const u128& in, std::uint64_t div, std::uint64_t mul) {
  out = in / div * mul;
}
inline void scale(BigInt& out, const BigInt& in, std::uint64_t div, std::uint64_t mul) {
  if (div == 1) {
    mpz_mul_ui(out.get_mpz_t(), in.get_mpz_t(), mul);
  } else {
    mpz_divexact_ui(out.get_mpz_t(), in.get_mpz_t(), div);
    mpz_mul_ui(out.get_mpz_t(), out.get_mpz_t(), mul);
  }
}

inline double log_of(std::uint64_t v) { return std::log(static_cast<double>(v)); }
inline double log_of(u128 v) { return std::log(static_cast<double>(v)); }
inline double log_of(const BigInt& v) {
  long exp = 0;
  const double mant = mpz_get_d_2exp(&exp, v.get_mpz_t());
  return std::log(mant) + static_cast<double>(exp) * std::numbers::ln2;
}

template <class Int>
Int from_big(const BigInt& v);
template <>
std::uint64_t from_big<std::uint64_t>(const BigInt& v) {
  return to_u64(v);
}
template <>
u128 from_big<u128>(const BigInt& v) {
  const BigInt hi = v >> 64;
  const BigInt lo = v - (hi << 64);
  return (static_cast<u128>(to_u64(hi)) << 64) | to_u64(lo);
}
template <>
BigInt from_big<BigInt>(const BigInt& v) {
  return v;
}

// Longest word that can be emitted: internal nodes satisfy
// p_max^ell(L) q_max^(L - ell(L)) >= mu >= eta^k, so they have length at most some L*, and
// emitted words at most L* + 1.
int length_cap_for(const Carpet& carpet, int k) {
  const auto& d = carpet.params();
  const double target = static_cast<double>(k) * log(d.eta);
  const double slack = 1e-9 * (1.0 + std::abs(target));
  const double lp = log(d.p_max);
  const double lq = d.q_max == 1 ? 0.0 : log(d.q_max);
  int last_internal = 0;
  for (int L = 1;; ++L) {
    const int l = carpet.ell(L);
    const double u = l * lp + (L - l) * lq;
    if (u < target - slack) break;
    last_internal = L;
    if (L > 1'000'000) throw ResourceLimitError("Lambda_k length bound does not converge");
  }
  return last_internal + 1;
}

struct EngineBase {
  virtual ~EngineBase() = default;
  virtual std::size_t task_count() const = 0;
  virtual void run(std::size_t task, const std::function<void(const LambdaWordRef&)>& emit) const = 0;
};

template <class Int>
class Engine final : public EngineBase {
 public:
  Engine(const Carpet& carpet, int k, int cap) : carpet_(carpet), k_(k), cap_(cap) {
    const std::uint64_t D = carpet.denominator();
    log_d_ = std::log(static_cast<double>(D));
    // thr[len] = ceil(E^k D^len / D^(2k)); mass >= eta^k iff numerator >= thr[len].
    const BigInt ek = pow(BigInt(static_cast<unsigned long>(carpet.eta_num())), static_cast<unsigned>(k));
    const BigInt d2k = pow(BigInt(static_cast<unsigned long>(D)), static_cast<unsigned>(2 * k));
    BigInt num = ek;
    thr_.reserve(cap + 2);
    for (int len = 0; len <= cap + 1; ++len) {
      BigInt t = (num + d2k - 1) / d2k;
      thr_.push_back(from_big<Int>(t));
      num *= static_cast<unsigned long>(D);
    }
    ell_.resize(cap + 2);
    for (int len = 0; len <= cap + 1; ++len) ell_[len] = carpet.ell(len);
    build_frontier();
  }

  std::size_t task_count() const override { return frontier_.size(); }

  void run(std::size_t task, const std::function<void(const LambdaWordRef&)>& emit) const override {
    const auto& node = frontier_.at(task);
    PackedWord buf = node.word;
    if (node.leaf) {
      emit_word(buf, node.num, emit);
      return;
    }
    std::vector<Int> scratch(cap_ + 2);
    dfs(buf, node.num, scratch, emit);
  }

 private:
  struct Node {
    PackedWord word;
    Int num;
    bool leaf = false;
  };

  // Calls fn(child_num) with buf holding each child in turn; buf is restored afterwards.
  template <class Fn>
  void for_each_child(PackedWord& buf, const Int& num, Int& child, Fn&& fn) const {
    const int len = static_cast<int>(buf.size());
    const int l = ell_[len];
    const int l1 = ell_[len + 1];
    const auto rows = static_cast<std::uint8_t>(carpet_.num_rows());
    if (l1 == l) {
      for (std::uint8_t r = 0; r < rows; ++r) {
        scale(child, num, 1, carpet_.q_num(r));
        buf.push_back(r);
        fn(child);
        buf.pop_back();
      }
      return;
    }
    if (l == len) {
      const auto pairs = static_cast<std::uint8_t>(carpet_.num_pairs());
      for (std::uint8_t g = 0; g < pairs; ++g) {
        scale(child, num, 1, carpet_.p_num(g));
        buf.push_back(g);
        fn(child);
        buf.pop_back();
      }
      return;
    }
    // Promote the leading tail digit to a pair, then append a row.
    const std::uint8_t lead = buf[l];
    const std::uint64_t b_lead = carpet_.q_num(lead);
    for (std::uint8_t g : carpet_.column_pairs(lead)) {
      buf[l] = g;
      for (std::uint8_t r = 0; r < rows; ++r) {
        scale(child, num, b_lead, carpet_.p_num(g) * carpet_.q_num(r));
        buf.push_back(r);
        fn(child);
        buf.pop_back();
      }
    }
    buf[l] = lead;
  }

  bool below(const Int& num, std::size_t len) const { return num < thr_[len]; }

  void check_length(std::size_t len) const {
    if (static_cast<int>(len) > cap_) throw std::logic_error("Lambda_k word exceeds its length bound");
  }

  void emit_word(const PackedWord& buf, const Int& num,
                 const std::function<void(const LambdaWordRef&)>& emit) const {
    LambdaWordRef ref;
    ref.word = PackedView(buf.data(), buf.size());
    ref.length = static_cast<int>(buf.size());
    ref.ell = ell_[buf.size()];
    ref.log_mass = log_of(num) - ref.length * log_d_;
    emit(ref);
  }

  void dfs(PackedWord& buf, const Int& num, std::vector<Int>& scratch,
           const std::function<void(const LambdaWordRef&)>& emit) const {
    const std::size_t depth = buf.size();
    check_length(depth + 1);
    Int& child = scratch[depth];
    for_each_child(buf, num, child, [&](const Int& c) {
      if (below(c, buf.size())) {
        emit_word(buf, c, emit);
      } else {
        // Deeper levels write scratch[depth + 1] onwards, so c stays intact.
        dfs(buf, c, scratch, emit);
      }
    });
  }

  void build_frontier() {
    frontier_.push_back(Node{PackedWord{}, Int(1), false});
    for (int round = 0; round < kMaxExpansionRounds && frontier_.size() < kTargetTasks; ++round) {
      bool expanded = false;
      std::vector<Node> next;
      for (auto& node : frontier_) {
        if (node.leaf) {
          next.push_back(std::move(node));
          continue;
        }
        expanded = true;
        check_length(node.word.size() + 1);
        Int child;
        for_each_child(node.word, node.num, child, [&](const Int& c) {
          next.push_back(Node{node.word, c, below(c, node.word.size())});
        });
      }
      frontier_ = std::move(next);
      if (!expanded) break;
    }
  }

  const Carpet& carpet_;
  int k_;
  int cap_;
  double log_d_ = 0;
  std::vector<Int> thr_;
  std::vector<int> ell_;
  std::vector<Node> frontier_;
};

}  // namespace

struct LambdaPlan::Impl {
  int cap = 0;
  std::string arithmetic;
  std::unique_ptr<EngineBase> engine;
};

LambdaPlan::LambdaPlan(const Carpet& carpet, int k) : impl_(std::make_unique<Impl>()) {
  if (k < 1) throw std::invalid_argument("Lambda_k requires k >= 1");
  impl_->cap = length_cap_for(carpet, k);
  const int bits = std::bit_width(carpet.denominator());
  // Numerators stay below D^(len + 1) <= 2^(bits * (cap + 2)).
  const long need = static_cast<long>(bits) * (impl_->cap + 2);
  if (need <= 64) {
    impl_->arithmetic = "u64";
    impl_->engine = std::make_unique<Engine<std::uint64_t>>(carpet, k, impl_->cap);
  } else if (need <= 128) {
    impl_->arithmetic = "u128";
    impl_->engine = std::make_unique<Engine<u128>>(carpet, k, impl_->cap);
  } else {
    impl_->arithmetic = "gmp";
    impl_->engine = std::make_unique<Engine<BigInt>>(carpet, k, impl_->cap);
  }
}

LambdaPlan::~LambdaPlan() = default;
LambdaPlan::LambdaPlan(LambdaPlan&&) noexcept = default;
LambdaPlan& LambdaPlan::operator=(LambdaPlan&&) noexcept = default;

std::size_t LambdaPlan::task_count() const { return impl_->engine->task_count(); }
int LambdaPlan::length_cap() const { return impl_->cap; }
std::string LambdaPlan::arithmetic() const { return impl_->arithmetic; }

void LambdaPlan::run(std::size_t task, const std::function<void(const LambdaWordRef&)>& emit) const {
  impl_->engine->run(task, emit);
}

PartitionLambdaK enumerate_lambda_k(const Carpet& carpet, int k, const EnumerationOptions& options) {
  LambdaPlan plan(carpet, k);
  std::vector<WordStore> parts(plan.task_count());
  std::atomic<std::size_t> total{0};
  run_tasks(plan.task_count(), options.threads, [&](std::size_t t) {
    plan.run(t, [&](const LambdaWordRef& w) {
      if (total.fetch_add(1, std::memory_order_relaxed) + 1 > options.cap_words) {
        throw ResourceLimitError("Lambda_" + std::to_string(k) + " has more than " +
                                 std::to_string(options.cap_words) +
                                 " words; raise the cap or use stream mode");
      }
      parts[t].push(w.word);
    });
  });
  PartitionLambdaK out;
  out.k = k;
  out.eta_k = pow(carpet.params().eta, static_cast<unsigned>(k));
  std::size_t words = 0, bytes = 0;
  for (const auto& p : parts) {
    words += p.size();
    bytes += p.byte_size();
  }
  out.words.reserve(words, bytes);
  for (const auto& p : parts) out.words.append(p);
  out.xi_min = std::numeric_limits<int>::max();
  out.xi_max = 0;
  for (std::size_t i = 0; i < out.words.size(); ++i) {
    const int len = out.words.length(static_cast<WordStore::Id>(i));
    out.xi_min = std::min(out.xi_min, len);
    out.xi_max = std::max(out.xi_max, len);
  }
  return out;
}

void for_each_lambda_k(const Carpet& carpet, int k, const std::function<void(const LambdaWordRef&)>& visit) {
  LambdaPlan plan(carpet, k);
  for (std::size_t t = 0; t < plan.task_count(); ++t) plan.run(t, visit);
}

void ExactMassSum::add(PackedView word) { add_weighted(word, 1); }

void ExactMassSum::add_weighted(PackedView word, unsigned long weight) {
  if (by_length_.size() <= word.size()) by_length_.resize(word.size() + 1);
  BigInt num = packed::mass_numerator(*carpet_, word);
  mpz_addmul_ui(by_length_[word.size()].get_mpz_t(), num.get_mpz_t(), weight);
}

Rational ExactMassSum::value() const {
  if (by_length_.empty()) return Rational(0);
  // Bring every length to the common denominator D^maxlen.
  const auto D = static_cast<unsigned long>(carpet_->denominator());
  const std::size_t top = by_length_.size() - 1;
  BigInt acc = 0;
  for (std::size_t len = 0; len <= top; ++len) {
    acc = acc * D + by_length_[len];
  }
  // Horner above multiplied the length-len term by D^(top - len).
  Rational r(acc, pow(BigInt(D), static_cast<unsigned>(top)));
  r.canonicalize();
  return r;
}

bool PartitionStats::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.pass; });
}

const BoundCheck* PartitionStats::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

PartitionStats partition_stats(const Carpet& carpet, const PartitionLambdaK& partition, bool check_disjoint) {
  PartitionStats st;
  st.k = partition.k;
  st.phi_k = partition.phi_k();
  st.xi_min = partition.xi_min;
  st.xi_max = partition.xi_max;
  const auto& d = carpet.params();
  const int k = partition.k;
  const auto D = static_cast<unsigned long>(carpet.denominator());
  const auto E = static_cast<unsigned long>(carpet.eta_num());
  const auto bmax = static_cast<unsigned long>(carpet.q_max_num());
  const Rational eta_k = pow(d.eta, static_cast<unsigned>(k));

  // Thresholds: mass(len) >= eta^k iff numerator >= thr[len].
  std::vector<BigInt> thr;
  {
    const BigInt ek = pow(BigInt(E), static_cast<unsigned>(k));
    const BigInt d2k = pow(BigInt(D), static_cast<unsigned>(2 * k));
    BigInt num = ek;
    for (int len = 0; len <= st.xi_max; ++len) {
      BigInt t = num + d2k - 1;
      mpz_fdiv_q(t.get_mpz_t(), t.get_mpz_t(), d2k.get_mpz_t());
      thr.push_back(t);
      num *= D;
    }
  }

  ExactMassSum mass(carpet);
  std::size_t stop_fail = 0, ratio_fail = 0, diam_fail = 0;
  std::string stop_example, ratio_example, diam_example;
  BigInt lhs, rhs;
  for (std::size_t w = 0; w < partition.words.size(); ++w) {
    const auto word = partition.words[static_cast<WordStore::Id>(w)];
    const int len = static_cast<int>(word.size());
    mass.add(word);
    const BigInt num = packed::mass_numerator(carpet, word);
    const BigInt pred = len > 1 ? packed::mass_numerator(carpet, packed::flat_predecessor(carpet, word))
                                : BigInt(1);
    const bool stop_ok = num < thr[len] && pred >= thr[len - 1];
    if (!stop_ok && stop_fail++ == 0) stop_example = CarpetWord::unpack(carpet, word).to_string();
    // eta <= num / (pred D) <= q_max.
    lhs = pred * E;
    rhs = num * D;
    bool ratio_ok = lhs <= rhs;
    lhs = pred * bmax;
    ratio_ok = ratio_ok && num <= lhs;
    if (!ratio_ok && ratio_fail++ == 0) ratio_example = CarpetWord::unpack(carpet, word).to_string();
    // sqrt2 m^-k <= |F| <= sqrt(n^2 + 1) m^-k iff n^l <= m^k <= n^(l+1).
    const int l = carpet.ell(len);
    const BigInt mk = pow(BigInt(carpet.m()), static_cast<unsigned>(len));
    const BigInt nl = pow(BigInt(carpet.n()), static_cast<unsigned>(l));
    const bool diam_ok = nl <= mk && mk <= nl * carpet.n();
    if (!diam_ok && diam_fail++ == 0) diam_example = CarpetWord::unpack(carpet, word).to_string();
  }
  st.mass_sum = mass.value();

  auto add = [&](std::string name, bool pass, std::string detail) {
    st.checks.push_back({std::move(name), pass, std::move(detail)});
  };
  add("mass_sum_one", st.mass_sum == 1, "sum of masses = " + to_string(st.mass_sum));
  add("stopping_rule", stop_fail == 0,
      stop_fail == 0 ? "mu(flat) >= eta^k > mu for every word"
                     : std::to_string(stop_fail) + " words violate it, e.g. " + stop_example);
  add("mass_ratio", ratio_fail == 0,
      ratio_fail == 0 ? "eta <= mu/mu(flat) <= q_max for every word"
                      : std::to_string(ratio_fail) + " words violate it, e.g. " + ratio_example);
  add("diameter_bounds", diam_fail == 0,
      diam_fail == 0 ? "sqrt2 m^-k <= |F| <= sqrt(n^2+1) m^-k for every word"
                     : std::to_string(diam_fail) + " words violate it, e.g. " + diam_example);

  const Rational phi(static_cast<unsigned long>(st.phi_k));
  const bool phi_ok = phi * eta_k * d.eta <= 1 && 1 < phi * eta_k;
  add("phi_eta_bounds", phi_ok,
      "phi_k = " + std::to_string(st.phi_k) + ", phi_k eta^(k+1) <= 1 < phi_k eta^k");
  const bool xi_ok = st.phi_k > 0 && pow(d.p_min, static_cast<unsigned>(st.xi_min)) < eta_k &&
                     eta_k <= pow(d.q_max, static_cast<unsigned>(st.xi_max - 1));
  add("xi_bounds", xi_ok,
      "xi = [" + std::to_string(st.xi_min) + ", " + std::to_string(st.xi_max) +
          "], p_min^xi_min < eta^k <= q_max^(xi_max-1)");
  if (check_disjoint) st.checks.push_back(check_disjoint_interiors(carpet, partition.words));
  return st;
}

BoundCheck check_consecutive(const Carpet& carpet, const PartitionStats& at_k, const PartitionStats& at_k1) {
  BoundCheck c;
  c.name = "phi_consecutive";
  if (at_k1.k != at_k.k + 1) throw std::invalid_argument("check_consecutive needs levels k and k+1");
  const Rational eta2 = carpet.params().eta * carpet.params().eta;
  const Rational a(static_cast<unsigned long>(at_k.phi_k));
  const Rational b(static_cast<unsigned long>(at_k1.phi_k));
  c.pass = a <= b && b * eta2 <= a;
  c.detail = "phi_" + std::to_string(at_k.k) + " = " + std::to_string(at_k.phi_k) + ", phi_" +
             std::to_string(at_k1.k) + " = " + std::to_string(at_k1.phi_k);
  return c;
}

BoundCheck check_disjoint_interiors(const Carpet& carpet, const WordStore& words) {
  BoundCheck c;
  c.name = "disjoint_interiors";
  if (words.empty()) {
    c.pass = true;
    c.detail = "empty";
    return c;
  }
  int lmax = 0, kmax = 0;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const int len = words.length(static_cast<WordStore::Id>(w));
    kmax = std::max(kmax, len);
    lmax = std::max(lmax, carpet.ell(len));
  }
  const BigInt xs = pow(BigInt(carpet.n()), static_cast<unsigned>(lmax));
  const BigInt ys = pow(BigInt(carpet.m()), static_cast<unsigned>(kmax));
  const BigInt limit = BigInt(1) << 120;
  if (xs > limit || ys > limit) {
    throw ResourceLimitError("disjointness sweep needs coordinates beyond 120 bits");
  }
  // Rectangles on the common grid n^-lmax x m^-kmax.
  struct Rect {
    u128 x0, x1, y0, y1;
    std::uint32_t id;
  };
  std::vector<Rect> rects;
  rects.reserve(words.size());
  std::vector<u128> npow(lmax + 1), mpow(kmax + 1);
  npow[0] = mpow[0] = 1;
  for (int i = 1; i <= lmax; ++i) npow[i] = npow[i - 1] * static_cast<unsigned>(carpet.n());
  for (int i = 1; i <= kmax; ++i) mpow[i] = mpow[i - 1] * static_cast<unsigned>(carpet.m());
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto word = words[static_cast<WordStore::Id>(w)];
    const int len = static_cast<int>(word.size());
    const int l = carpet.ell(len);
    u128 x = 0, y = 0;
    for (int h = 0; h < len; ++h) {
      int j;
      if (h < l) {
        const auto& d = carpet.pair_at(word[h]);
        x = x * static_cast<unsigned>(carpet.n()) + static_cast<unsigned>(d.i);
        j = d.j;
      } else {
        j = carpet.row_at(word[h]);
      }
      y = y * static_cast<unsigned>(carpet.m()) + static_cast<unsigned>(j);
    }
    const u128 sx = npow[lmax - l], sy = mpow[kmax - len];
    rects.push_back({x * sx, (x + 1) * sx, y * sy, (y + 1) * sy, static_cast<std::uint32_t>(w)});
  }
  // Events sorted by x; at equal x, removals precede insertions so touching edges pass.
  struct Event {
    u128 x;
    bool insert;
    std::uint32_t rect;
  };
  std::vector<Event> events;
  events.reserve(2 * rects.size());
  for (std::uint32_t r = 0; r < rects.size(); ++r) {
    events.push_back({rects[r].x0, true, r});
    events.push_back({rects[r].x1, false, r});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.insert != b.insert) return !a.insert;
    return a.rect < b.rect;
  });
  std::map<u128, std::pair<u128, std::uint32_t>> active;  // y0 -> (y1, rect)
  auto overlap_found = [&](std::uint32_t a, std::uint32_t b) {
    c.pass = false;
    c.detail = "interiors of " + CarpetWord::unpack(carpet, words[rects[a].id]).to_string() + " and " +
               CarpetWord::unpack(carpet, words[rects[b].id]).to_string() + " overlap";
    return c;
  };
  for (const auto& e : events) {
    const auto& r = rects[e.rect];
    if (!e.insert) {
      active.erase(r.y0);
      continue;
    }
    auto it = active.lower_bound(r.y0);
    if (it != active.end() && it->first < r.y1) return overlap_found(e.rect, it->second.second);
    if (it != active.begin()) {
      auto prev = std::prev(it);
      if (prev->second.first > r.y0) return overlap_found(e.rect, prev->second.second);
    }
    active.emplace(r.y0, std::make_pair(r.y1, e.rect));
  }
  c.pass = true;
  c.detail = std::to_string(rects.size()) + " rectangles, no interior overlap";
  return c;
}

}  // namespace carpetq
