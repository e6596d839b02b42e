#include "ollga/exact_dp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

#include "ollga/kernels/kernels.hpp"

namespace ollga {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// P[max = i] from P[max <= i] held as exp(AL[i]); switches between the
// expm1 form (adjacent values both near 1) and plain subtraction (values far
// apart) so tiny tail probabilities keep their relative accuracy.
inline double max_level_prob(double e_prev, double al_prev, double al_cur, double e_cur) {
  const double gap = al_cur - al_prev;
  return gap <= 30.0 ? e_prev * std::expm1(gap) : e_cur - e_prev;
}

struct CrossKey {
  std::int32_t ell;
  std::int32_t g;
  std::int32_t capacity;
  std::uint64_t lambda_bits;
  bool operator==(const CrossKey&) const = default;
};

struct CrossKeyHash {
  std::size_t operator()(const CrossKey& k) const {
    std::uint64_t x = k.lambda_bits;
    x ^= (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.ell)) << 32) |
         static_cast<std::uint32_t>(k.g);
    x ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.capacity)) << 17;
    x *= 0x9e3779b97f4a7c15ULL;
    x ^= x >> 29;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 32;
    return static_cast<std::size_t>(x);
  }
};

// Best-of distribution of the truncated crossover change for one
// (ell, g, lambda, capacity) tuple. probs[i] = P[delta = delta_lo + i] for the
// improving deltas only.
struct CrossDist {
  std::int32_t delta_lo = 1;
  double p_improve = 0.0;
  std::uint32_t cost = 0;  // recomputation effort, drives eviction
  std::vector<double> probs;

  std::size_t bytes() const { return 96 + probs.capacity() * sizeof(double); }
};

struct CrossView {
  int delta_lo = 1;
  const double* probs = nullptr;
  int count = 0;
  double p_improve = 0.0;
  std::shared_ptr<const CrossDist> hold;  // keeps cached data alive
};

struct Workspace {
  std::vector<double> ell_log, pell;
  std::vector<double> hyp_log, hyp, tail, al, ex, pg;
  std::vector<double> bg_log, bg, bb_log, bb;
  std::vector<double> praw, c_tail, c_al, c_ex, c_probs;
  double point[1] = {1.0};

  // Single-slot memo for the positive-ell distribution (policies hold lambda
  // constant over long fitness stretches).
  std::uint64_t ell_owner = 0;
  std::uint64_t ell_lambda_bits = 0;
  int ell_lo = 0, ell_hi = 0;

  // Thread-local view of the shared crossover cache for the two most recent
  // (lambda, capacity) pairs; avoids the shard mutex on the hit path.
  struct CrossMemoSlot {
    std::uint64_t owner = 0;
    std::uint64_t lambda_bits = 0;
    int capacity = -1;
    std::unordered_map<std::uint32_t, CrossView> views;
  };
  CrossMemoSlot cross_slots[2];
  int cross_slot_next = 0;

  CrossMemoSlot& cross_slot(std::uint64_t owner, std::uint64_t lambda_bits, int capacity) {
    for (auto& slot : cross_slots)
      if (slot.owner == owner && slot.lambda_bits == lambda_bits && slot.capacity == capacity)
        return slot;
    auto& slot = cross_slots[cross_slot_next];
    cross_slot_next ^= 1;
    slot.owner = owner;
    slot.lambda_bits = lambda_bits;
    slot.capacity = capacity;
    slot.views.clear();
    return slot;
  }

  // Lazily built Bin(m, 1/lambda) pmfs, truncated to the relevant range;
  // shared by every crossover build for the same lambda on this thread.
  struct BankEntry {
    int lo = 0;
    std::vector<double> probs;
    bool built = false;
  };
  struct BinomBank {
    std::uint64_t owner = 0;
    std::uint64_t lambda_bits = 0;
    std::vector<BankEntry> entries;
  };
  BinomBank binom_banks[2];
  int binom_bank_next = 0;

  BinomBank& binom_bank(std::uint64_t owner, std::uint64_t lambda_bits) {
    for (auto& bank : binom_banks)
      if (bank.owner == owner && bank.lambda_bits == lambda_bits) return bank;
    auto& bank = binom_banks[binom_bank_next];
    binom_bank_next ^= 1;
    bank.owner = owner;
    bank.lambda_bits = lambda_bits;
    for (auto& e : bank.entries) e.built = false;
    return bank;
  }
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

}  // namespace

struct DpEvaluator::Impl {
  static constexpr int kShards = 64;

  // Never-reused identity for the thread-local memos (heap addresses can be
  // recycled across evaluator lifetimes).
  static std::uint64_t next_instance_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
  }
  const std::uint64_t instance_id = next_instance_id();

  struct Shard {
    std::mutex mutex;
    std::unordered_map<CrossKey, std::shared_ptr<const CrossDist>, CrossKeyHash> map;
    std::size_t bytes = 0;
  };

  const int n;
  const DpConfig config;
  const LogFactTable& lf;
  mutable Shard shards[kShards];
  mutable std::atomic<std::uint64_t> hits{0}, misses{0}, evictions{0};

  Impl(int n_, const DpConfig& cfg, const LogFactTable& lf_) : n(n_), config(cfg), lf(lf_) {}

  std::shared_ptr<const CrossDist> cache_get(const CrossKey& key) const {
    Shard& shard = shards[CrossKeyHash{}(key) % kShards];
    std::lock_guard lock(shard.mutex);
    const auto it = shard.map.find(key);
    if (it == shard.map.end()) {
      misses.fetch_add(1, std::memory_order_relaxed);
      return nullptr;
    }
    hits.fetch_add(1, std::memory_order_relaxed);
    return it->second;
  }

  void cache_put(const CrossKey& key, std::shared_ptr<const CrossDist> dist) const {
    Shard& shard = shards[CrossKeyHash{}(key) % kShards];
    const std::size_t budget = std::max<std::size_t>(config.cache_bytes / kShards, 1 << 16);
    std::lock_guard lock(shard.mutex);
    auto [it, inserted] = shard.map.emplace(key, std::move(dist));
    if (!inserted) return;
    shard.bytes += it->second->bytes();
    if (shard.bytes <= budget) return;
    // Over budget: keep the entries that are most expensive to recompute.
    std::vector<std::uint32_t> costs;
    costs.reserve(shard.map.size());
    for (const auto& [k, v] : shard.map) costs.push_back(v->cost);
    auto mid = costs.begin() + static_cast<std::ptrdiff_t>(costs.size() / 2);
    std::nth_element(costs.begin(), mid, costs.end());
    const std::uint32_t threshold = *mid;
    for (auto it2 = shard.map.begin(); it2 != shard.map.end();) {
      if (it2->second->cost <= threshold && shard.bytes > budget / 2) {
        shard.bytes -= it2->second->bytes();
        it2 = shard.map.erase(it2);
        evictions.fetch_add(1, std::memory_order_relaxed);
      } else {
        ++it2;
      }
    }
  }

  // Positive-ell distribution restricted to the entries that can move a
  // 64-bit sum; fills ws.pell and returns [lo, hi].
  std::pair<int, int> ell_distribution(double lambda, Workspace& ws) const {
    const auto lambda_bits = std::bit_cast<std::uint64_t>(lambda);
    if (ws.ell_owner == instance_id && ws.ell_lambda_bits == lambda_bits)
      return {ws.ell_lo, ws.ell_hi};
    const double ratio = lambda / static_cast<double>(n);
    if (ratio >= 1.0) {
      ws.pell.assign(1, 1.0);
      ws.ell_owner = instance_id;
      ws.ell_lambda_bits = lambda_bits;
      ws.ell_lo = ws.ell_hi = n;
      return {n, n};
    }
    ws.ell_log.resize(static_cast<std::size_t>(n));
    const double lp = std::log(ratio);
    const double lq = std::log1p(-ratio);
    const double lnorm = std::log(-std::expm1(static_cast<double>(n) * lq));
    double lmax = -kInf;
    for (int ell = 1; ell <= n; ++ell) {
      const double v = lf.log_binom(n, ell) + ell * lp + (n - ell) * lq - lnorm;
      ws.ell_log[static_cast<std::size_t>(ell - 1)] = v;
      if (v > lmax) lmax = v;
    }
    const double thr = lmax - config.log_cutoff;
    int lo = 1, hi = n;
    while (lo < hi && ws.ell_log[static_cast<std::size_t>(lo - 1)] < thr) ++lo;
    while (hi > lo && ws.ell_log[static_cast<std::size_t>(hi - 1)] < thr) --hi;
    const auto count = static_cast<std::size_t>(hi - lo + 1);
    ws.pell.resize(count);
    kernels::exp_batch(ws.ell_log.data() + (lo - 1), ws.pell.data(), count);
    ws.ell_owner = instance_id;
    ws.ell_lambda_bits = lambda_bits;
    ws.ell_lo = lo;
    ws.ell_hi = hi;
    return {lo, hi};
  }

  const Workspace::BankEntry& binom_pmf(int m, double lambda, Workspace& ws) const {
    auto& bank = ws.binom_bank(instance_id, std::bit_cast<std::uint64_t>(lambda));
    if (bank.entries.size() <= static_cast<std::size_t>(m))
      bank.entries.resize(static_cast<std::size_t>(m) + 1);
    auto& entry = bank.entries[static_cast<std::size_t>(m)];
    if (entry.built) return entry;
    entry.built = true;
    entry.probs.clear();
    if (m == 0) {
      entry.lo = 0;
      entry.probs.assign(1, 1.0);
      return entry;
    }
    const double c = 1.0 / lambda;
    const double q = 1.0 - c;
    int mode = static_cast<int>((m + 1) * c);
    if (mode > m) mode = m;
    const double pm =
        std::exp(lf.log_binom(m, mode) + mode * (-std::log(lambda)) + (m - mode) * std::log1p(-c));
    const double threshold = pm * std::exp(-config.log_cutoff);
    int lo = mode, hi = mode;
    double v = pm;
    while (lo > 0) {
      v = v * (static_cast<double>(lo) * q) / (static_cast<double>(m - lo + 1) * c);
      if (v < threshold) break;
      --lo;
    }
    v = pm;
    while (hi < m) {
      v = v * (static_cast<double>(m - hi) * c) / (static_cast<double>(hi + 1) * q);
      if (v < threshold) break;
      ++hi;
    }
    entry.lo = lo;
    entry.probs.resize(static_cast<std::size_t>(hi - lo + 1));
    entry.probs[static_cast<std::size_t>(mode - lo)] = pm;
    v = pm;
    for (int i = mode; i > lo; --i) {
      v = v * (static_cast<double>(i) * q) / (static_cast<double>(m - i + 1) * c);
      entry.probs[static_cast<std::size_t>(i - 1 - lo)] = v;
    }
    v = pm;
    for (int i = mode; i < hi; ++i) {
      v = v * (static_cast<double>(m - i) * c) / (static_cast<double>(i + 1) * q);
      entry.probs[static_cast<std::size_t>(i + 1 - lo)] = v;
    }
    return entry;
  }

  CrossView cross_dist(int ell, int g, double lambda, int capacity, Workspace& ws) const {
    const int base = std::max(0, 2 * g - ell);
    CrossView view;
    // Degenerate cases resolved without touching any cache.
    if (g == 0) {
      view.delta_lo = 0;
      view.p_improve = 0.0;
      return view;
    }
    if (lambda == 1.0 || g == ell) {
      // Bias 1 copies the winner; g == ell cannot be beaten by crossover.
      const int delta = g == ell ? g : base;
      view.delta_lo = delta;
      if (delta >= 1) {
        view.probs = ws.point;
        view.count = 1;
        view.p_improve = 1.0;
      }
      return view;
    }

    const auto lambda_bits = std::bit_cast<std::uint64_t>(lambda);
    auto& slot = ws.cross_slot(instance_id, lambda_bits, capacity);
    const std::uint32_t local_key =
        (static_cast<std::uint32_t>(ell) << 16) | static_cast<std::uint32_t>(g);
    if (const auto it = slot.views.find(local_key); it != slot.views.end()) return it->second;

    const CrossKey key{ell, g, capacity, lambda_bits};
    if (auto cached = cache_get(key)) {
      view.delta_lo = cached->delta_lo;
      view.probs = cached->probs.data();
      view.count = static_cast<int>(cached->probs.size());
      view.p_improve = cached->p_improve;
      view.hold = std::move(cached);
      slot.views.emplace(local_key, view);
      return view;
    }

    std::uint32_t cost = 0;

    // Good-bit flips dg ~ Bin(g, 1/lambda); bad-bit flips db ~ Bin(ell-g, .).
    const auto& bank_g = binom_pmf(g, lambda, ws);
    const int a1 = bank_g.lo;
    const int a2 = bank_g.lo + static_cast<int>(bank_g.probs.size()) - 1;
    const double* bg = bank_g.probs.data();
    const auto& bank_b = binom_pmf(ell - g, lambda, ws);
    const int b1 = bank_b.lo;
    const int b2 = bank_b.lo + static_cast<int>(bank_b.probs.size()) - 1;
    const double* bb = bank_b.probs.data();
    cost += static_cast<std::uint32_t>(bank_g.probs.size() + bank_b.probs.size());

    auto dist = std::make_shared<CrossDist>();
    const int dmax = a2 - b1;  // largest reachable dg - db
    if (dmax <= base) {
      // Everything folds into the fallback change.
      dist->delta_lo = base;
      if (base >= 1) {
        dist->p_improve = 1.0;
        dist->probs.assign(1, 1.0);
      }
    } else {
      // Upper tail of the raw change d = dg - db for d > base.
      const int dcount = dmax - base + 1;  // entries for delta = base .. dmax
      ws.praw.assign(static_cast<std::size_t>(dcount), 0.0);
      for (int dval = base + 1; dval <= dmax; ++dval) {
        const int blo = std::max(b1, a1 - dval);
        const int bhi = std::min(b2, a2 - dval);
        if (blo > bhi) continue;
        const auto len = static_cast<std::size_t>(bhi - blo + 1);
        ws.praw[static_cast<std::size_t>(dval - base)] =
            kernels::dot(bg + (dval + blo - a1), bb + (blo - b1), len);
        cost += static_cast<std::uint32_t>(len);
      }
      ws.c_tail.resize(static_cast<std::size_t>(dcount));
      ws.c_tail[static_cast<std::size_t>(dcount - 1)] = 0.0;
      for (int i = dcount - 2; i >= 0; --i)
        ws.c_tail[static_cast<std::size_t>(i)] =
            ws.c_tail[static_cast<std::size_t>(i + 1)] + ws.praw[static_cast<std::size_t>(i + 1)];
      ws.c_al.resize(static_cast<std::size_t>(dcount));
      for (int i = 0; i < dcount; ++i)
        ws.c_al[static_cast<std::size_t>(i)] =
            capacity * std::log1p(-std::min(ws.c_tail[static_cast<std::size_t>(i)], 1.0));
      ws.c_ex.resize(static_cast<std::size_t>(dcount));
      kernels::exp_batch(ws.c_al.data(), ws.c_ex.data(), static_cast<std::size_t>(dcount));

      const int delta_lo = std::max(base, 1);
      dist->delta_lo = delta_lo;
      dist->p_improve = base >= 1 ? 1.0 : -std::expm1(ws.c_al[0]);
      int out_count = dmax - delta_lo + 1;
      dist->probs.resize(static_cast<std::size_t>(out_count));
      for (int delta = delta_lo; delta <= dmax; ++delta) {
        const int i = delta - base;
        dist->probs[static_cast<std::size_t>(delta - delta_lo)] =
            delta == base ? ws.c_ex[0]
                          : max_level_prob(ws.c_ex[static_cast<std::size_t>(i - 1)],
                                           ws.c_al[static_cast<std::size_t>(i - 1)],
                                           ws.c_al[static_cast<std::size_t>(i)],
                                           ws.c_ex[static_cast<std::size_t>(i)]);
      }
      while (out_count > 0 && dist->probs[static_cast<std::size_t>(out_count - 1)] == 0.0)
        --out_count;
      dist->probs.resize(static_cast<std::size_t>(out_count));
    }
    dist->cost = cost;

    view.delta_lo = dist->delta_lo;
    view.probs = dist->probs.data();
    view.count = static_cast<int>(dist->probs.size());
    view.p_improve = dist->p_improve;
    view.hold = dist;
    slot.views.emplace(local_key, view);
    cache_put(key, std::move(dist));
    return view;
  }

  struct Agg {
    double p = 0.0;
    double t = 0.0;
    double wsum = 0.0;  // E_ell[1 - c^ell - (1-c)^ell]
  };

  Agg column(int f, double lambda, int capacity, const double* T, Workspace& ws) const {
    Agg agg;
    const auto [ell_lo, ell_hi] = ell_distribution(lambda, ws);
    const int d = n - f;
    const double c = 1.0 / lambda;

    const double t_cap = T[f + 1];
    // Visit ell from the likeliest value outward so the negligibility test
    // can retire both tails early.
    int ell_mode = ell_lo;
    for (int ell = ell_lo + 1; ell <= ell_hi; ++ell)
      if (ws.pell[static_cast<std::size_t>(ell - ell_lo)] >
          ws.pell[static_cast<std::size_t>(ell_mode - ell_lo)])
        ell_mode = ell;
    int ell_up = ell_mode, ell_down = ell_mode - 1;
    bool ell_take_up = true;
    bool up_dead = false, down_dead = false;
    while ((ell_up <= ell_hi && !up_dead) || (ell_down >= ell_lo && !down_dead)) {
      int ell;
      const bool up_ok = ell_up <= ell_hi && !up_dead;
      const bool down_ok = ell_down >= ell_lo && !down_dead;
      if (up_ok && (!down_ok || ell_take_up))
        ell = ell_up++;
      else
        ell = ell_down--;
      ell_take_up = !ell_take_up;
      const double pl = ws.pell[static_cast<std::size_t>(ell - ell_lo)];
      // Entire ell level cannot move any accumulator: retire the direction.
      if (pl == 0.0 ||
          (agg.p + pl == agg.p && agg.t + pl * t_cap == agg.t && agg.wsum + pl == agg.wsum)) {
        if (ell >= ell_mode)
          up_dead = true;
        else
          down_dead = true;
        continue;
      }
      agg.wsum += pl * (1.0 - std::pow(c, ell) - std::pow(1.0 - c, ell));

      // Good-flip count of a single mutant: hypergeometric.
      const int glo = std::max(0, ell - f);
      const int ghi = std::min(ell, d);
      const int m = ghi - glo + 1;
      ws.hyp_log.resize(static_cast<std::size_t>(m));
      double hmax = -kInf;
      for (int j = 0; j < m; ++j) {
        const int g = glo + j;
        const double v =
            lf.log_binom(d, g) + lf.log_binom(f, ell - g) - lf.log_binom(n, ell);
        ws.hyp_log[static_cast<std::size_t>(j)] = v;
        if (v > hmax) hmax = v;
      }
      int j1 = 0, j2 = m - 1;
      const double thr = hmax - config.log_cutoff;
      while (j1 < j2 && ws.hyp_log[static_cast<std::size_t>(j1)] < thr) ++j1;
      while (j2 > j1 && ws.hyp_log[static_cast<std::size_t>(j2)] < thr) --j2;
      const int mc = j2 - j1 + 1;
      ws.hyp.resize(static_cast<std::size_t>(mc));
      kernels::exp_batch(ws.hyp_log.data() + j1, ws.hyp.data(), static_cast<std::size_t>(mc));

      // Best of `capacity` mutants.
      ws.tail.resize(static_cast<std::size_t>(mc));
      ws.tail[static_cast<std::size_t>(mc - 1)] = 0.0;
      for (int j = mc - 2; j >= 0; --j)
        ws.tail[static_cast<std::size_t>(j)] =
            ws.tail[static_cast<std::size_t>(j + 1)] + ws.hyp[static_cast<std::size_t>(j + 1)];
      ws.al.resize(static_cast<std::size_t>(mc));
      for (int j = 0; j < mc; ++j)
        ws.al[static_cast<std::size_t>(j)] =
            capacity * std::log1p(-std::min(ws.tail[static_cast<std::size_t>(j)], 1.0));
      ws.ex.resize(static_cast<std::size_t>(mc));
      kernels::exp_batch(ws.al.data(), ws.ex.data(), static_cast<std::size_t>(mc));
      ws.pg.resize(static_cast<std::size_t>(mc));
      ws.pg[0] = ws.ex[0];
      for (int j = 1; j < mc; ++j)
        ws.pg[static_cast<std::size_t>(j)] =
            max_level_prob(ws.ex[static_cast<std::size_t>(j - 1)],
                           ws.al[static_cast<std::size_t>(j - 1)],
                           ws.al[static_cast<std::size_t>(j)], ws.ex[static_cast<std::size_t>(j)]);

      // Work outward from the likeliest winner level. A direction dies after
      // two levels in a row whose entire weight could not move either
      // accumulator; the bound wg * max(1, T[f+1]) caps any contribution, so
      // structural zeros (no improving mass at this g) never cause a strike.
      const double t_bound = T[f + 1];
      int jm = 0;
      for (int j = 1; j < mc; ++j)
        if (ws.pg[static_cast<std::size_t>(j)] > ws.pg[static_cast<std::size_t>(jm)]) jm = j;
      int up = jm, down = jm - 1;
      int up_strikes = 0, down_strikes = 0;
      bool take_up = true;
      while ((up < mc && up_strikes < 2) || (down >= 0 && down_strikes < 2)) {
        int j;
        const bool up_alive = up < mc && up_strikes < 2;
        const bool down_alive = down >= 0 && down_strikes < 2;
        if (up_alive && (!down_alive || take_up)) {
          j = up++;
        } else {
          j = down--;
        }
        take_up = !take_up;
        const double wg = pl * ws.pg[static_cast<std::size_t>(j)];
        const bool negligible = agg.p + wg == agg.p && agg.t + wg * t_bound == agg.t;
        if (!negligible) {
          const int g = glo + j1 + j;
          const CrossView cv = cross_dist(ell, g, lambda, capacity, ws);
          agg.p += wg * cv.p_improve;
          if (cv.count > 0)
            agg.t += wg * kernels::dot(cv.probs, T + f + cv.delta_lo,
                                       static_cast<std::size_t>(cv.count));
        }
        if (j >= jm) {
          up_strikes = negligible ? up_strikes + 1 : 0;
        } else {
          down_strikes = negligible ? down_strikes + 1 : 0;
        }
      }
    }
    return agg;
  }
};

DpEvaluator::DpEvaluator(int n, DpConfig config) : n_(n), config_(config), lf_(n) {
  if (n < 1) throw std::invalid_argument("DpEvaluator: n must be >= 1");
  impl_ = std::make_unique<Impl>(n_, config_, lf_);
}

DpEvaluator::~DpEvaluator() = default;

DpEvaluator::Column DpEvaluator::remaining_time(int f, double lambda, int capacity,
                                                std::span<const double> T) const {
  if (f < 0 || f >= n_) throw std::invalid_argument("remaining_time: fitness out of range");
  if (!(lambda >= 1.0 && lambda <= static_cast<double>(n_)))
    throw std::invalid_argument("remaining_time: lambda out of [1, n]");
  if (capacity < 1 || capacity > n_)
    throw std::invalid_argument("remaining_time: capacity out of [1, n]");
  Workspace& ws = workspace();
  const Impl::Agg agg = impl_->column(f, lambda, capacity, T.data(), ws);
  const double tau = capacity * (1.0 + agg.wsum);
  Column col;
  col.outcome.p_improve = agg.p;
  col.outcome.cost = tau;
  col.ok = agg.p > 0.0;
  if (col.ok) {
    col.outcome.t_cond = agg.t / agg.p;
    col.value = (tau + agg.t) / agg.p;
  } else {
    col.value = kInf;
  }
  return col;
}

DpEvaluator::Column DpEvaluator::remaining_time(int f, double lambda,
                                                const RoundingMode& rounding,
                                                std::span<const double> T) const {
  switch (rounding.kind) {
    case RoundingMode::Kind::Nearest:
      return remaining_time(f, lambda, round_nearest(lambda), T);
    case RoundingMode::Kind::Decoupled:
      return remaining_time(f, lambda, rounding.capacities[static_cast<std::size_t>(f)], T);
    case RoundingMode::Kind::Stochastic: {
      const double ce = std::ceil(lambda);
      const double w = ce - lambda;  // probability of the floor capacity
      if (w <= 0.0) return remaining_time(f, lambda, static_cast<int>(ce), T);
      Workspace& ws = workspace();
      const auto lo_cap = static_cast<int>(std::floor(lambda));
      const auto hi_cap = static_cast<int>(ce);
      const Impl::Agg a = impl_->column(f, lambda, lo_cap, T.data(), ws);
      const Impl::Agg b = impl_->column(f, lambda, hi_cap, T.data(), ws);
      const double p = w * a.p + (1.0 - w) * b.p;
      const double t = w * a.t + (1.0 - w) * b.t;
      const double tau = w * lo_cap * (1.0 + a.wsum) + (1.0 - w) * hi_cap * (1.0 + b.wsum);
      Column col;
      col.outcome.p_improve = p;
      col.outcome.cost = tau;
      col.ok = p > 0.0;
      if (col.ok) {
        col.outcome.t_cond = t / p;
        col.value = (tau + t) / p;
      } else {
        col.value = kInf;
      }
      return col;
    }
  }
  throw std::logic_error("remaining_time: bad rounding kind");
}

double DpEvaluator::iteration_cost(double lambda, int capacity) const {
  Workspace& ws = workspace();
  const auto [lo, hi] = impl_->ell_distribution(lambda, ws);
  const double c = 1.0 / lambda;
  double wsum = 0.0;
  for (int ell = lo; ell <= hi; ++ell)
    wsum += ws.pell[static_cast<std::size_t>(ell - lo)] *
            (1.0 - std::pow(c, ell) - std::pow(1.0 - c, ell));
  return capacity * (1.0 + wsum);
}

RuntimeTable DpEvaluator::policy_runtime(const Policy& policy, const RoundingMode& rounding) const {
  if (policy.n != n_) throw std::invalid_argument("policy_runtime: dimension mismatch");
  policy.validate();
  rounding.validate(n_);
  RuntimeTable rt;
  rt.n = n_;
  rt.T.assign(static_cast<std::size_t>(n_) + 1, 0.0);
  for (int f = n_ - 1; f >= 0; --f) {
    const Column col = remaining_time(f, policy.lambda_at(f), rounding, rt.T);
    if (!col.ok)
      throw std::runtime_error("policy_runtime: improvement probability underflowed at fitness " +
                               std::to_string(f));
    rt.T[static_cast<std::size_t>(f)] = col.value;
  }
  rt.total = init_weighted_total(rt.T);
  return rt;
}

RuntimeTable DpEvaluator::policy_runtime_explicit(const Policy& policy,
                                                  const std::vector<int>& capacities) const {
  if (policy.n != n_) throw std::invalid_argument("policy_runtime_explicit: dimension mismatch");
  return policy_runtime(policy, RoundingMode::decoupled(capacities));
}

double DpEvaluator::init_weighted_total(std::span<const double> T) const {
  const double ln2n = static_cast<double>(n_) * std::log(2.0);
  std::vector<double> weights(static_cast<std::size_t>(n_) + 1);
  for (int f = 0; f <= n_; ++f)
    weights[static_cast<std::size_t>(f)] = std::exp(lf_.log_binom(n_, f) - ln2n);
  return kernels::dot(weights.data(), T.data(), weights.size());
}

CacheStats DpEvaluator::cache_stats() const {
  CacheStats s;
  s.hits = impl_->hits.load();
  s.misses = impl_->misses.load();
  s.evictions = impl_->evictions.load();
  for (const auto& shard : impl_->shards) s.bytes += shard.bytes;
  return s;
}

std::vector<double> mutation_good_dist(int n, int f, int ell) {
  if (n < 1 || f < 0 || f > n || ell < 1 || ell > n)
    throw std::invalid_argument("mutation_good_dist: bad arguments");
  const LogFactTable lf(n);
  std::vector<double> dist(static_cast<std::size_t>(ell) + 1, 0.0);
  const int d = n - f;
  const int glo = std::max(0, ell - f);
  const int ghi = std::min(ell, d);
  for (int g = glo; g <= ghi; ++g)
    dist[static_cast<std::size_t>(g)] =
        std::exp(lf.log_binom(d, g) + lf.log_binom(f, ell - g) - lf.log_binom(n, ell));
  return dist;
}

std::vector<double> best_of(std::span<const double> dist, int capacity) {
  if (capacity < 1) throw std::invalid_argument("best_of: capacity must be >= 1");
  const std::size_t m = dist.size();
  double total = 0.0;
  for (double v : dist) total += v;
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("best_of: distribution must sum to 1");
  std::vector<double> tail(m), al(m), ex(m), out(m);
  tail[m - 1] = 0.0;
  for (std::size_t i = m - 1; i > 0; --i) tail[i - 1] = tail[i] + dist[i];
  for (std::size_t i = 0; i < m; ++i) al[i] = capacity * std::log1p(-std::min(tail[i], 1.0));
  kernels::exp_batch(al.data(), ex.data(), m);
  out[0] = ex[0];
  for (std::size_t i = 1; i < m; ++i) out[i] = max_level_prob(ex[i - 1], al[i - 1], al[i], ex[i]);
  return out;
}

std::vector<double> crossover_truncated_dist(int ell, int g, double lambda) {
  if (ell < 1 || g < 0 || g > ell || lambda < 1.0)
    throw std::invalid_argument("crossover_truncated_dist: bad arguments");
  std::vector<double> dist(static_cast<std::size_t>(ell) + 1, 0.0);
  const int base = std::max(0, 2 * g - ell);
  if (lambda == 1.0) {
    dist[static_cast<std::size_t>(base)] = 1.0;
    return dist;
  }
  const LogFactTable lf(ell);
  const double lc = -std::log(lambda);
  const double l1c = std::log1p(-1.0 / lambda);
  const int h = ell - g;
  for (int a = 0; a <= g; ++a) {
    const double pa = std::exp(lf.log_binom(g, a) + a * lc + (g - a) * l1c);
    for (int b = 0; b <= h; ++b) {
      const double pb = std::exp(lf.log_binom(h, b) + b * lc + (h - b) * l1c);
      const int delta = std::max(base, a - b);
      dist[static_cast<std::size_t>(delta)] += pa * pb;
    }
  }
  return dist;
}

}  // namespace ollga
