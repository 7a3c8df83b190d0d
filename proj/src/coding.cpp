#include "carpetq/coding.hpp"

#include "carpetq/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <unordered_map>

namespace carpetq {

CodingWord::CodingWord(const Carpet& carpet, std::vector<DigitPair> omega, std::vector<int> rho)
    : omega_(std::move(omega)), rho_(std::move(rho)) {
  const int t = total();
  if (t < 1) throw std::invalid_argument("coding word must be non-empty");
  if (static_cast<int>(omega_.size()) != carpet.ell(t)) {
    throw std::invalid_argument("coding word " + to_string() + " not in Phi*: |omega| = " +
                                std::to_string(omega_.size()) + " but ell(" + std::to_string(t) +
                                ") = " + std::to_string(carpet.ell(t)));
  }
  for (const auto& d : omega_) {
    if (!carpet.has_pair(d)) throw std::invalid_argument("coding word " + to_string() + ": pair not in G");
  }
  for (int j : rho_) {
    if (!carpet.has_row(j)) throw std::invalid_argument("coding word " + to_string() + ": digit not in Gy");
  }
}

CodingWord CodingWord::unpack(const Carpet& carpet, PackedView packed) {
  CodingWord w;
  const int l = carpet.ell(static_cast<int>(packed.size()));
  for (std::size_t h = 0; h < packed.size(); ++h) {
    if (static_cast<int>(h) < l) {
      w.omega_.push_back(carpet.pair_at(packed[h]));
    } else {
      w.rho_.push_back(carpet.row_at(packed[h]));
    }
  }
  return w;
}

PackedWord CodingWord::pack(const Carpet& carpet) const {
  PackedWord out;
  out.reserve(omega_.size() + rho_.size());
  for (const auto& d : omega_) out.push_back(carpet.pair_index(d));
  for (int j : rho_) out.push_back(carpet.row_index(j));
  return out;
}

std::string CodingWord::to_string() const {
  std::string s = "(";
  for (std::size_t h = 0; h < omega_.size(); ++h) {
    if (h) s += ",";
    s += "(" + std::to_string(omega_[h].i) + "," + std::to_string(omega_[h].j) + ")";
  }
  s += ") x (";
  for (std::size_t h = 0; h < rho_.size(); ++h) {
    if (h) s += ",";
    s += std::to_string(rho_[h]);
  }
  return s + ")";
}

CodingWord L_map(const Carpet& carpet, const CarpetWord& sigma) {
  return CodingWord(carpet, sigma.pairs(), sigma.tail());
}

CarpetWord L_inverse(const Carpet& carpet, const CodingWord& w) {
  return CarpetWord(carpet, w.omega(), w.rho());
}

Rational lambda_mass(const Carpet& carpet, const CodingWord& w) {
  return packed::mass(carpet, w.pack(carpet));
}

CodingWord coding_predecessor(const Carpet& carpet, const CodingWord& w) {
  return CodingWord::unpack(carpet, packed::coding_predecessor(carpet, w.pack(carpet)));
}

bool is_descendant(const CodingWord& a, const CodingWord& b) {
  const auto& ao = a.omega();
  const auto& bo = b.omega();
  const auto& ar = a.rho();
  const auto& br = b.rho();
  return ao.size() <= bo.size() && ar.size() <= br.size() && std::equal(ao.begin(), ao.end(), bo.begin()) &&
         std::equal(ar.begin(), ar.end(), br.begin());
}

CodingWord swap_tail(const Carpet& carpet, const CodingWord& w, int i) {
  if (w.omega().empty() || w.rho().empty()) {
    throw std::invalid_argument("swap_tail needs a non-empty omega and rho: " + w.to_string());
  }
  const int j_last = w.rho().back();
  if (!carpet.has_pair({i, j_last})) {
    throw std::invalid_argument("swap_tail: " + std::to_string(i) + " not in Gx(" + std::to_string(j_last) + ")");
  }
  auto omega = w.omega();
  auto rho = w.rho();
  const int j_l = omega.back().j;
  omega.back() = {i, j_last};
  rho.back() = j_l;
  return CodingWord(carpet, std::move(omega), std::move(rho));
}

namespace packed {

PackedWord coding_predecessor(const Carpet& carpet, PackedView word) {
  const int t = static_cast<int>(word.size());
  if (t < 2) throw std::invalid_argument("length-1 words have no predecessor");
  const int l = carpet.ell(t);
  PackedWord out(word.begin(), word.end());
  if (carpet.ell(t - 1) == l) {
    out.pop_back();
  } else {
    out.erase(out.begin() + (l - 1));
  }
  return out;
}

}  // namespace packed

std::vector<int> xi_sequence(const Carpet& carpet, int xi_min, int xi_max) {
  if (xi_min < 1 || xi_max < xi_min) throw std::invalid_argument("xi_sequence: bad length range");
  std::vector<int> xi{xi_min};
  for (;;) {
    const int want = carpet.ell(xi.back()) + 1;
    int next = 0;
    for (int h = xi.back() + 1; h <= xi_max; ++h) {
      if (carpet.ell(h) == want) {
        next = h;
        break;
      }
    }
    if (next == 0) break;
    xi.push_back(next);
  }
  return xi;
}

bool Antichain::family_mass_exact() const {
  return std::all_of(stages.begin(), stages.end(), [](const StageLog& s) { return s.family_mass_failures == 0; });
}
bool Antichain::mass_band_holds() const {
  return std::all_of(stages.begin(), stages.end(), [](const StageLog& s) { return s.mass_band_failures == 0; });
}
bool Antichain::family_bounds_hold() const {
  return std::all_of(stages.begin(), stages.end(), [](const StageLog& s) { return s.bound_failures == 0; });
}

namespace {

double entropy_term(const Carpet& carpet, PackedView word) {
  const double lm = packed::log_mass(carpet, word);
  return std::exp(lm) * lm;
}

std::string show(const Carpet& carpet, PackedView word) { return CodingWord::unpack(carpet, word).to_string(); }

// thr[len] with lambda(len-word) >= eta^k iff numerator >= thr[len].
std::vector<BigInt> numerator_thresholds(const Carpet& carpet, int k, int max_len) {
  const auto D = static_cast<unsigned long>(carpet.denominator());
  const BigInt d2k = pow(BigInt(D), static_cast<unsigned>(2 * k));
  BigInt num = pow(BigInt(static_cast<unsigned long>(carpet.eta_num())), static_cast<unsigned>(k));
  std::vector<BigInt> thr;
  for (int len = 0; len <= max_len; ++len) {
    BigInt t = num + d2k - 1;
    mpz_fdiv_q(t.get_mpz_t(), t.get_mpz_t(), d2k.get_mpz_t());
    thr.push_back(t);
    num *= D;
  }
  return thr;
}

Rational weighted_length(const Carpet& carpet, const WordStore& words, const std::vector<char>* alive) {
  ExactMassSum acc(carpet);
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (alive && !(*alive)[i]) continue;
    const auto w = words[static_cast<WordStore::Id>(i)];
    acc.add_weighted(w, static_cast<unsigned long>(w.size()));
  }
  return acc.value();
}

}  // namespace

Antichain build_antichain(const Carpet& carpet, const PartitionLambdaK& partition, const AntichainOptions& options) {
  Antichain out;
  out.k = partition.k;
  out.initial_count = partition.phi_k();
  if (partition.phi_k() == 0) throw std::invalid_argument("build_antichain: empty partition");
  out.xi = xi_sequence(carpet, partition.xi_min, partition.xi_max);
  const int M = static_cast<int>(out.xi.size());
  if (M != carpet.ell(partition.xi_max) - carpet.ell(partition.xi_min) + 1) {
    throw std::logic_error("xi sequence length disagrees with the ell range");
  }

  WordStore store;
  store.append(partition.words);
  std::vector<char> alive(store.size(), 1);
  WordIndex index(store, store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!index.insert(static_cast<WordStore::Id>(i))) {
      throw AntichainError("duplicate word in Lambda_k: " + show(carpet, store[static_cast<WordStore::Id>(i)]));
    }
  }

  CompensatedSum initial;
  for (std::size_t i = 0; i < store.size(); ++i) initial.add(entropy_term(carpet, store[static_cast<WordStore::Id>(i)]));
  out.initial_entropy = initial.value();
  out.initial_weighted_length = weighted_length(carpet, store, nullptr);

  const auto thr = numerator_thresholds(carpet, partition.k, partition.xi_max + 1);
  const double C1 = carpet.params().C1;
  const bool full_log = partition.k <= options.full_log_max_k;
  const int xi0 = out.xi.front();
  CompensatedSum delta;

  for (int l = 1; l < M; ++l) {
    StageLog st;
    st.stage = l + 1;
    st.xi = out.xi[l];
    const int x = st.xi;
    const int lx = carpet.ell(x);

    std::vector<WordStore::Id> F;
    for (std::size_t i = 0; i < store.size(); ++i) {
      if (!alive[i]) continue;
      const auto id = static_cast<WordStore::Id>(i);
      const int len = store.length(id);
      if (len >= xi0 && len < x) ++st.gamma_size;
      if (len != x) continue;
      PackedWord a(store[id].begin(), store[id].end());
      while (static_cast<int>(a.size()) > xi0) {
        a = packed::coding_predecessor(carpet, a);
        if (index.contains(a)) {
          F.push_back(id);
          break;
        }
      }
    }

    // Sibling families: F words that differ only in the i of the last omega pair.
    std::unordered_map<std::string, std::size_t> family_of;
    std::vector<std::vector<WordStore::Id>> families;
    for (auto id : F) {
      const auto w = store[id];
      if (lx < 1 || lx >= x) {
        throw AntichainError("F word without the pair-then-tail shape: " + show(carpet, w));
      }
      std::string key(w.begin(), w.end());
      key[lx - 1] = static_cast<char>(carpet.row_of_pair(w[lx - 1]));
      auto [it, fresh] = family_of.emplace(std::move(key), families.size());
      if (fresh) families.emplace_back();
      families[it->second].push_back(id);
    }
    st.families = families.size();
    st.f_words = F.size();

    std::vector<PackedWord> G;
    BigInt f_num_total = 0, g_num_total = 0;
    CompensatedSum stage_f, stage_g;
    for (const auto& fam : families) {
      const auto first = store[fam.front()];
      const std::uint8_t row_l = carpet.row_of_pair(first[lx - 1]);
      if (fam.size() != carpet.column_pairs(row_l).size()) {
        throw AntichainError("incomplete family at length " + std::to_string(x) + " around " +
                             show(carpet, first) + ": " + std::to_string(fam.size()) + " of " +
                             std::to_string(carpet.column_pairs(row_l).size()) + " members");
      }
      // Representative: the member with the smallest i (pair indices of one row sort by i).
      WordStore::Id rep = fam.front();
      for (auto id : fam) {
        if (store[id][lx - 1] < store[rep][lx - 1]) rep = id;
      }
      const PackedWord base(store[rep].begin(), store[rep].end());
      const std::uint8_t row_last = base[x - 1];

      FamilyRecord rec;
      BigInt f_num = 0, g_num = 0;
      CompensatedSum f_term, g_term;
      for (auto id : fam) {
        const auto w = store[id];
        f_num += packed::mass_numerator(carpet, w);
        f_term.add(entropy_term(carpet, w));
        if (full_log) rec.f_words.emplace_back(w.begin(), w.end());
      }
      for (std::uint8_t g : carpet.column_pairs(row_last)) {
        PackedWord w = base;
        w[lx - 1] = g;
        w[x - 1] = row_l;
        const BigInt num = packed::mass_numerator(carpet, w);
        g_num += num;
        g_term.add(entropy_term(carpet, w));
        const BigInt pred = packed::mass_numerator(carpet, packed::coding_predecessor(carpet, w));
        if (!(num < thr[x] && pred >= thr[x - 1])) ++st.mass_band_failures;
        if (full_log) rec.g_words.push_back(w);
        G.push_back(std::move(w));
      }
      if (f_num != g_num) ++st.family_mass_failures;
      const double lambda_f = to_double(Rational(f_num, pow(BigInt(static_cast<unsigned long>(carpet.denominator())),
                                                            static_cast<unsigned>(x))));
      const double gap = std::abs(f_term.value() - g_term.value());
      st.max_family_ratio = std::max(st.max_family_ratio, gap / lambda_f);
      if (gap > C1 * lambda_f) ++st.bound_failures;
      f_num_total += f_num;
      g_num_total += g_num;
      stage_f.merge(f_term);
      stage_g.merge(g_term);
      delta.add(g_term.value());
      delta.add(-f_term.value());
      if (full_log) {
        rec.mass = Rational(f_num, pow(BigInt(static_cast<unsigned long>(carpet.denominator())), static_cast<unsigned>(x)));
        rec.mass.canonicalize();
        rec.f_term = f_term.value();
        rec.g_term = g_term.value();
        st.detail.push_back(std::move(rec));
      }
    }
    const BigInt dx = pow(BigInt(static_cast<unsigned long>(carpet.denominator())), static_cast<unsigned>(x));
    st.f_mass = Rational(f_num_total, dx);
    st.f_mass.canonicalize();
    st.g_mass = Rational(g_num_total, dx);
    st.g_mass.canonicalize();
    st.f_term = stage_f.value();
    st.g_term = stage_g.value();
    st.g_words = G.size();

    for (auto id : F) {
      alive[id] = 0;
      index.erase(store[id]);
    }
    for (const auto& w : G) {
      const auto id = store.push(w);
      alive.push_back(1);
      if (!index.insert(id)) {
        throw AntichainError("replacement word " + show(carpet, w) + " collides at stage " +
                             std::to_string(st.stage));
      }
    }
    out.stages.push_back(std::move(st));
  }

  CompensatedSum final_entropy;
  out.l_min = std::numeric_limits<int>::max();
  out.l_max = 0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!alive[i]) continue;
    const auto w = store[static_cast<WordStore::Id>(i)];
    out.words.push(w);
    final_entropy.add(entropy_term(carpet, w));
    out.l_min = std::min(out.l_min, static_cast<int>(w.size()));
    out.l_max = std::max(out.l_max, static_cast<int>(w.size()));
  }
  out.final_entropy = final_entropy.value();
  out.final_weighted_length = weighted_length(carpet, out.words, nullptr);
  out.delta_k = M == 1 ? 0.0 : std::abs(delta.value());
  out.delta_k_direct = std::abs(out.final_entropy - out.initial_entropy);
  return out;
}

AntichainReport verify_maximal_antichain(const Carpet& carpet, const WordStore& words, unsigned threads) {
  AntichainReport rep;
  WordIndex index(words, words.size());
  std::size_t duplicates = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!index.insert(static_cast<WordStore::Id>(i))) {
      if (duplicates++ == 0) rep.example = "duplicate word " + show(carpet, words[static_cast<WordStore::Id>(i)]);
    }
  }
  constexpr std::size_t kChunks = 64;
  std::vector<std::size_t> bad(kChunks, 0);
  std::vector<std::string> example(kChunks);
  const std::size_t per = (words.size() + kChunks - 1) / kChunks;
  run_tasks(kChunks, threads, [&](std::size_t c) {
    const std::size_t end = std::min(words.size(), (c + 1) * per);
    for (std::size_t i = c * per; i < end; ++i) {
      const auto w = words[static_cast<WordStore::Id>(i)];
      PackedWord a(w.begin(), w.end());
      while (a.size() > 1) {
        a = packed::coding_predecessor(carpet, a);
        if (index.contains(a)) {
          if (bad[c]++ == 0) example[c] = show(carpet, a) + " precedes " + show(carpet, w);
          break;
        }
      }
    }
  });
  rep.comparable_pairs = duplicates;
  for (std::size_t c = 0; c < kChunks; ++c) {
    if (rep.example.empty() && bad[c] > 0) rep.example = example[c];
    rep.comparable_pairs += bad[c];
  }
  rep.incomparable = rep.comparable_pairs == 0;
  ExactMassSum mass(carpet);
  for (std::size_t i = 0; i < words.size(); ++i) mass.add(words[static_cast<WordStore::Id>(i)]);
  rep.mass_sum = mass.value();
  rep.mass_one = rep.mass_sum == 1;
  return rep;
}

std::size_t count_comparable_pairs_quadratic(const Carpet& carpet, const WordStore& words) {
  std::vector<CodingWord> ws;
  ws.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) ws.push_back(CodingWord::unpack(carpet, words[static_cast<WordStore::Id>(i)]));
  std::size_t count = 0;
  for (std::size_t a = 0; a < ws.size(); ++a) {
    for (std::size_t b = a + 1; b < ws.size(); ++b) {
      if (is_descendant(ws[a], ws[b]) || is_descendant(ws[b], ws[a])) ++count;
    }
  }
  return count;
}

double compute_U_k(const Carpet& carpet, int k) {
  if (k < 1) throw std::invalid_argument("compute_U_k requires k >= 1");
  const auto& d = carpet.params();
  const int l = carpet.ell(k);
  return -(static_cast<double>(l) * d.Hp + static_cast<double>(k - l) * d.Hq);
}

double compute_d_k(const Carpet& carpet, int k) {
  return compute_U_k(carpet, k) / (-static_cast<double>(k) * std::log(static_cast<double>(carpet.m())));
}

double d_k_exhaustive(const Carpet& carpet, int k) {
  if (k < 1) throw std::invalid_argument("d_k_exhaustive requires k >= 1");
  const int l = carpet.ell(k);
  const std::size_t G = carpet.num_pairs(), R = carpet.num_rows();
  double count = 1;
  for (int h = 0; h < k; ++h) count *= static_cast<double>(h < l ? G : R);
  if (count > 2e7) throw ResourceLimitError("Phi_k too large for exhaustive summation");
  const auto D = static_cast<unsigned long>(carpet.denominator());
  const BigInt Dk = pow(BigInt(D), static_cast<unsigned>(k));
  PackedWord w(k, 0);
  CompensatedSum entropy;
  BigInt total = 0;
  for (;;) {
    const BigInt num = packed::mass_numerator(carpet, w);
    total += num;
    Rational lambda(num, Dk);
    lambda.canonicalize();
    entropy.add(to_double(lambda) * log(lambda));
    int h = k - 1;
    while (h >= 0) {
      const std::size_t limit = h < l ? G : R;
      if (++w[h] < limit) break;
      w[h] = 0;
      --h;
    }
    if (h < 0) break;
  }
  if (total != Dk) throw std::logic_error("Phi_k masses do not sum to one");
  return entropy.value() / (-static_cast<double>(k) * std::log(static_cast<double>(carpet.m())));
}

TValue compute_t(const Carpet& carpet, const WordStore& words) {
  if (words.empty()) throw std::invalid_argument("compute_t: empty antichain");
  CompensatedSum num, den;
  const double log_m = std::log(static_cast<double>(carpet.m()));
  int lo = std::numeric_limits<int>::max(), hi = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto w = words[static_cast<WordStore::Id>(i)];
    const double lm = packed::log_mass(carpet, w);
    const double lambda = std::exp(lm);
    num.add(lambda * lm);
    den.add(-lambda * static_cast<double>(w.size()) * log_m);
    lo = std::min(lo, static_cast<int>(w.size()));
    hi = std::max(hi, static_cast<int>(w.size()));
  }
  TValue t;
  t.t = num.value() / den.value();
  t.d_min = std::numeric_limits<double>::infinity();
  t.d_max = -std::numeric_limits<double>::infinity();
  for (int h = lo; h <= hi; ++h) {
    const double d = compute_d_k(carpet, h);
    t.d_min = std::min(t.d_min, d);
    t.d_max = std::max(t.d_max, d);
  }
  return t;
}

namespace {

struct SkAcc {
  CompensatedSum entropy;
  CompensatedSum scale;
  std::size_t count = 0;
  int xi_min = std::numeric_limits<int>::max();
  int xi_max = 0;
  double log_m = 0;

  void visit(const LambdaWordRef& w) {
    const double mu = std::exp(w.log_mass);
    entropy.add(mu * w.log_mass);
    scale.add(-mu * static_cast<double>(w.length) * log_m);
    ++count;
    xi_min = std::min(xi_min, w.length);
    xi_max = std::max(xi_max, w.length);
  }
  void merge(const SkAcc& o) {
    entropy.merge(o.entropy);
    scale.merge(o.scale);
    count += o.count;
    xi_min = std::min(xi_min, o.xi_min);
    xi_max = std::max(xi_max, o.xi_max);
  }
};

SkValue finish(int k, const SkAcc& acc) {
  SkValue v;
  v.k = k;
  v.phi_k = acc.count;
  v.xi_min = acc.xi_min;
  v.xi_max = acc.xi_max;
  v.entropy = acc.entropy.value();
  v.scale = acc.scale.value();
  v.s_k = v.entropy / v.scale;
  return v;
}

}  // namespace

SkValue compute_s_k(const Carpet& carpet, const PartitionLambdaK& partition) {
  SkAcc acc;
  acc.log_m = std::log(static_cast<double>(carpet.m()));
  for (std::size_t i = 0; i < partition.words.size(); ++i) {
    const auto w = partition.words[static_cast<WordStore::Id>(i)];
    LambdaWordRef ref;
    ref.word = w;
    ref.length = static_cast<int>(w.size());
    ref.ell = carpet.ell(ref.length);
    ref.log_mass = packed::log_mass(carpet, w);
    acc.visit(ref);
  }
  return finish(partition.k, acc);
}

SkValue compute_s_k_stream(const Carpet& carpet, int k, unsigned threads) {
  SkAcc init;
  init.log_m = std::log(static_cast<double>(carpet.m()));
  return finish(k, reduce_lambda_k(carpet, k, threads, init));
}

SequencePoint make_sequence_point(const Carpet& carpet, const SkValue& s, double t_k) {
  const auto& d = carpet.params();
  const double log_m = std::log(static_cast<double>(carpet.m()));
  SequencePoint p;
  p.k = s.k;
  p.phi_k = s.phi_k;
  p.xi_min = s.xi_min;
  p.xi_max = s.xi_max;
  p.d_k = compute_d_k(carpet, s.k);
  p.t_k = t_k;
  p.s_k = s.s_k;
  p.s0 = d.s0;
  p.bound_dk = 2.0 * d.Hp / (s.k * log_m);
  p.bound_sk = (d.C1 + 2.0 * d.Hp) / (s.xi_min * log_m);
  p.bound_tk = 2.0 * d.Hp / (s.xi_min * log_m);
  const double gap = p.s0 - p.d_k;
  p.pass = gap >= -kDkTolerance && gap <= p.bound_dk + kDkTolerance && std::abs(p.s_k - p.s0) <= p.bound_sk &&
           (std::isnan(p.t_k) || std::abs(p.t_k - p.s0) <= p.bound_tk);
  return p;
}

}  // namespace carpetq
