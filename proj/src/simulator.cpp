#include "ollga/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "ollga/math.hpp"

namespace ollga {

namespace {

std::shared_ptr<const LogFactTable> shared_log_facts(int n) {
  static std::mutex mutex;
  static std::map<int, std::weak_ptr<const LogFactTable>> cache;
  std::lock_guard g(mutex);
  auto& slot = cache[n];
  if (auto existing = slot.lock()) return existing;
  auto fresh = std::make_shared<const LogFactTable>(n);
  slot = fresh;
  return fresh;
}

// Inversion from the mode; pmf extended stepwise by the binomial recurrence.
// Consumes exactly one uniform draw.
int sample_binomial(int n, double p, const LogFactTable& lf, Rng& rng) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  const double q = 1.0 - p;
  int mode = static_cast<int>((n + 1) * p);
  if (mode > n) mode = n;
  const double log_pm = lf.log_binom(n, mode) + mode * std::log(p) + (n - mode) * std::log(q);
  const double pm = std::exp(log_pm);
  double u = rng.next_unit();
  u -= pm;
  if (u < 0.0) return mode;
  int hi = mode, lo = mode;
  double p_hi = pm, p_lo = pm;
  while (hi < n || lo > 0) {
    if (hi < n) {
      p_hi = p_hi * (static_cast<double>(n - hi) * p) / (static_cast<double>(hi + 1) * q);
      ++hi;
      u -= p_hi;
      if (u < 0.0) return hi;
    }
    if (lo > 0) {
      p_lo = p_lo * (static_cast<double>(lo) * q) / (static_cast<double>(n - lo + 1) * p);
      --lo;
      u -= p_lo;
      if (u < 0.0) return lo;
    }
  }
  return mode;  // mass lost to rounding (~1e-15); fall back to the mode
}

struct RunState {
  int n;
  const LogFactTable& lf;
  Rng& rng;
  Accounting accounting;
  std::uint64_t cap;

  std::vector<std::uint8_t> x;   // parent bits; fitness counts ones
  int fitness = 0;

  std::uint64_t evals = 0;
  std::uint64_t stop_count = 0;
  bool optimum_seen = false;
  bool capped = false;

  std::vector<int> perm;               // persistent permutation for partial Fisher-Yates
  std::vector<int> mutant_positions;   // flat, capacity x ell
  std::vector<int> mutant_gains;
  std::vector<std::uint16_t> offspring_taken;  // flat, indices into the winner's flips
  std::vector<int> offspring_count;
  std::vector<int> offspring_gain;     // INT_MIN when not evaluated

  RunState(int n_, const LogFactTable& lf_, Rng& rng_, Accounting acc, std::uint64_t cap_)
      : n(n_), lf(lf_), rng(rng_), accounting(acc), cap(cap_), x(static_cast<std::size_t>(n_)),
        perm(static_cast<std::size_t>(n_)) {
    for (int i = 0; i < n_; ++i) perm[static_cast<std::size_t>(i)] = i;
  }

  // Records one fitness evaluation; returns false when the run must stop
  // (cap reached before any optimum was evaluated).
  bool count_eval(int value) {
    ++evals;
    if (!optimum_seen && value == n) {
      optimum_seen = true;
      stop_count = evals;
    }
    // Once an optimum was evaluated the iteration is guaranteed to finish the
    // run, so the cap no longer aborts it.
    if (!optimum_seen && evals >= cap) {
      capped = true;
      return false;
    }
    return true;
  }

  void init_parent() {
    int f = 0;
    for (int base = 0; base < n; base += 64) {
      std::uint64_t bits = rng.next_u64();
      const int top = std::min(base + 64, n);
      for (int i = base; i < top; ++i) {
        const std::uint8_t b = static_cast<std::uint8_t>(bits & 1u);
        bits >>= 1;
        x[static_cast<std::size_t>(i)] = b;
        f += b;
      }
    }
    fitness = f;
    count_eval(fitness);
  }

  void force_parent_fitness(int f) {
    std::fill(x.begin(), x.end(), std::uint8_t{0});
    for (int j = 0; j < f; ++j) {
      const std::uint64_t r = static_cast<std::uint64_t>(j) + rng.next_below(static_cast<std::uint64_t>(n - j));
      std::swap(perm[static_cast<std::size_t>(j)], perm[static_cast<std::size_t>(r)]);
      x[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])] = 1;
    }
    fitness = f;
  }

  // One full iteration; returns the number of evaluations it performed.
  // Aborts early only on cap, or on optimum under stop_at_optimum accounting.
  std::uint64_t run_iteration(double lambda, int capacity, int ell) {
    const std::uint64_t evals_before = evals;
    const auto cap_sz = static_cast<std::size_t>(capacity);
    const auto ell_sz = static_cast<std::size_t>(ell);

    // Mutation phase: capacity offspring, each flipping ell distinct u.a.r.
    // positions (partial Fisher-Yates over the persistent permutation).
    mutant_positions.resize(cap_sz * ell_sz);
    mutant_gains.resize(cap_sz);
    for (int m = 0; m < capacity; ++m) {
      int* pos = mutant_positions.data() + static_cast<std::size_t>(m) * ell_sz;
      int gain = 0;
      for (int j = 0; j < ell; ++j) {
        const std::uint64_t r =
            static_cast<std::uint64_t>(j) + rng.next_below(static_cast<std::uint64_t>(n - j));
        std::swap(perm[static_cast<std::size_t>(j)], perm[static_cast<std::size_t>(r)]);
        const int p = perm[static_cast<std::size_t>(j)];
        pos[j] = p;
        gain += x[static_cast<std::size_t>(p)] ? -1 : 1;
      }
      mutant_gains[static_cast<std::size_t>(m)] = gain;
      if (!count_eval(fitness + gain)) return evals - evals_before;
      if (optimum_seen && accounting == Accounting::StopAtOptimum) return evals - evals_before;
    }

    // Best mutant, ties broken u.a.r. with a single draw.
    const int best_gain = *std::max_element(mutant_gains.begin(), mutant_gains.end());
    int tie_count = 0;
    for (int m = 0; m < capacity; ++m) tie_count += mutant_gains[static_cast<std::size_t>(m)] == best_gain;
    const auto pick = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(tie_count)));
    int winner = -1;
    for (int m = 0, seen = 0; m < capacity; ++m) {
      if (mutant_gains[static_cast<std::size_t>(m)] == best_gain && seen++ == pick) {
        winner = m;
        break;
      }
    }
    const int* flips = mutant_positions.data() + static_cast<std::size_t>(winner) * ell_sz;
    const int mutant_fitness = fitness + best_gain;

    // Crossover phase: capacity offspring, each taking the winner's value in
    // every differing position independently with probability 1/lambda.
    // Offspring equal to the parent or the winner are not evaluated.
    const double bias = 1.0 / lambda;
    int best_off = -1;
    int best_off_gain = std::numeric_limits<int>::min();
    int evaluated_any = 0;
    if (bias < 1.0) {
      offspring_taken.resize(cap_sz * ell_sz);
      offspring_count.assign(cap_sz, 0);
      offspring_gain.assign(cap_sz, std::numeric_limits<int>::min());
      for (int o = 0; o < capacity; ++o) {
        auto* taken = offspring_taken.data() + static_cast<std::size_t>(o) * ell_sz;
        int count = 0;
        int gain = 0;
        for (int j = 0; j < ell; ++j) {
          if (rng.next_unit() < bias) {
            taken[count++] = static_cast<std::uint16_t>(j);
            gain += x[static_cast<std::size_t>(flips[j])] ? -1 : 1;
          }
        }
        offspring_count[static_cast<std::size_t>(o)] = count;
        if (count == 0 || count == ell) continue;  // equals x or x'; skipped
        offspring_gain[static_cast<std::size_t>(o)] = gain;
        ++evaluated_any;
        if (gain > best_off_gain) best_off_gain = gain;
        if (!count_eval(fitness + gain)) return evals - evals_before;
        if (optimum_seen && accounting == Accounting::StopAtOptimum) return evals - evals_before;
      }
      if (evaluated_any > 0) {
        int ties = 0;
        for (int o = 0; o < capacity; ++o) ties += offspring_gain[static_cast<std::size_t>(o)] == best_off_gain;
        const auto r = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(ties)));
        for (int o = 0, seen = 0; o < capacity; ++o) {
          if (offspring_gain[static_cast<std::size_t>(o)] == best_off_gain && seen++ == r) {
            best_off = o;
            break;
          }
        }
      }
    }

    // Selection: the best evaluated offspring only replaces the winner when
    // strictly better; the parent accepts on ties.
    int y_fitness = mutant_fitness;
    bool y_is_winner = true;
    if (evaluated_any > 0 && fitness + best_off_gain > mutant_fitness) {
      y_fitness = fitness + best_off_gain;
      y_is_winner = false;
    }
    if (y_fitness >= fitness) {
      if (y_is_winner) {
        for (int j = 0; j < ell; ++j) x[static_cast<std::size_t>(flips[j])] ^= 1u;
      } else {
        const auto* taken = offspring_taken.data() + static_cast<std::size_t>(best_off) * ell_sz;
        const int count = offspring_count[static_cast<std::size_t>(best_off)];
        for (int t = 0; t < count; ++t) x[static_cast<std::size_t>(flips[taken[t]])] ^= 1u;
      }
      fitness = y_fitness;
    }
    return evals - evals_before;
  }
};

}  // namespace

int sample_ell(int n, double lambda, Rng& rng) {
  const auto lf = shared_log_facts(n);
  const double p = lambda / static_cast<double>(n);
  for (;;) {
    const int v = sample_binomial(n, p, *lf, rng);
    if (v > 0) return v;
  }
}

int population_size(double lambda, const RoundingMode& rounding, int fitness, Rng& rng) {
  switch (rounding.kind) {
    case RoundingMode::Kind::Nearest:
      return round_nearest(lambda);
    case RoundingMode::Kind::Stochastic: {
      const double fl = std::floor(lambda);
      const double ce = std::ceil(lambda);
      const double u = rng.next_unit();  // always consumed in this mode
      return u < ce - lambda ? static_cast<int>(fl) : static_cast<int>(ce);
    }
    case RoundingMode::Kind::Decoupled:
      return rounding.capacities[static_cast<std::size_t>(fitness)];
  }
  throw std::logic_error("population_size: bad rounding kind");
}

RunRecord run_ga(int n, const Policy& policy, const RoundingMode& rounding, std::uint64_t seed,
                 const RunConfig& config) {
  if (policy.n != n) throw std::invalid_argument("run_ga: policy dimension mismatch");
  rounding.validate(n);
  const std::uint64_t cap = config.eval_cap
                                ? config.eval_cap
                                : 100ULL * static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
  const auto lf = shared_log_facts(n);
  Rng rng(seed);
  RunState state(n, *lf, rng, config.accounting, cap);

  RunRecord rec;
  rec.seed = seed;
  state.init_parent();

  while (state.fitness < n && !state.capped) {
    if (state.optimum_seen && config.accounting == Accounting::StopAtOptimum) break;
    const int f_enter = state.fitness;
    const double lambda = policy.lambda_at(f_enter);
    const int ell = sample_ell(n, lambda, rng);
    const int capacity = population_size(lambda, rounding, f_enter, rng);
    const std::uint64_t iter_evals = state.run_iteration(lambda, capacity, ell);
    ++rec.iterations;
    if (config.record_trace)
      rec.trace.push_back({f_enter, lambda, capacity, ell, iter_evals});
  }

  rec.status = state.capped ? RunStatus::Capped : RunStatus::ReachedOptimum;
  rec.final_fitness = state.capped ? state.fitness : n;
  rec.evaluations = (config.accounting == Accounting::StopAtOptimum && state.optimum_seen)
                        ? state.stop_count
                        : state.evals;
  return rec;
}

std::uint64_t simulate_iteration_evals(int n, int fitness, double lambda, int capacity, Rng& rng) {
  const auto lf = shared_log_facts(n);
  RunState state(n, *lf, rng, Accounting::FullIteration,
                 std::numeric_limits<std::uint64_t>::max());
  state.force_parent_fitness(fitness);
  const int ell = sample_ell(n, lambda, rng);
  return state.run_iteration(lambda, capacity, ell);
}

}  // namespace ollga
