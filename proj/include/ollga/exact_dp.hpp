#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ollga/math.hpp"
#include "ollga/policy.hpp"

namespace ollga {

// Per-fitness expected remaining evaluations plus the total weighted by the
// binomial initialization distribution. T[n] = 0; the initial evaluation is
// not part of the total.
struct RuntimeTable {
  int n = 0;
  std::vector<double> T;  // n + 1 entries
  double total = 0.0;
};

struct IterationOutcome {
  double p_improve = 0.0;  // probability one iteration improves the parent
  double t_cond = 0.0;     // conditional remaining time after an improvement
  double cost = 0.0;       // expected evaluations per iteration
};

struct DpConfig {
  // Contributions more than exp(-log_cutoff) below the dominant term of a
  // distribution are dropped (they cannot move a 64-bit sum).
  double log_cutoff = 46.0;
  std::size_t cache_bytes = 2ull << 30;
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;
  std::size_t bytes = 0;
};

// Exact expected-runtime evaluation by backward dynamic programming over
// fitness levels. Thread-safe: concurrent evaluations share the read-only
// log-factorial table and a sharded distribution cache.
class DpEvaluator {
 public:
  explicit DpEvaluator(int n, DpConfig config = {});
  ~DpEvaluator();
  DpEvaluator(const DpEvaluator&) = delete;
  DpEvaluator& operator=(const DpEvaluator&) = delete;

  int n() const { return n_; }
  const LogFactTable& log_facts() const { return lf_; }

  struct Column {
    double value = 0.0;  // T_f
    IterationOutcome outcome;
    bool ok = false;  // false when the improvement probability underflowed to 0
  };

  // Expected remaining time at fitness f for one (lambda, capacity) pair;
  // T[f+1 .. n] must already be filled.
  Column remaining_time(int f, double lambda, int capacity, std::span<const double> T) const;
  // Rounding-aware variant; Stochastic mixes the floor/ceil capacities.
  Column remaining_time(int f, double lambda, const RoundingMode& rounding,
                        std::span<const double> T) const;

  // tau = capacity * (1 + E_ell[1 - (1/lambda)^ell - (1 - 1/lambda)^ell]).
  double iteration_cost(double lambda, int capacity) const;

  RuntimeTable policy_runtime(const Policy& policy, const RoundingMode& rounding) const;
  RuntimeTable policy_runtime_explicit(const Policy& policy,
                                       const std::vector<int>& capacities) const;

  double init_weighted_total(std::span<const double> T) const;

  CacheStats cache_stats() const;

 private:
  struct Impl;
  int n_;
  DpConfig config_;
  LogFactTable lf_;
  std::unique_ptr<Impl> impl_;
};

// Hypergeometric distribution of "good" flips among ell flipped positions at
// fitness f: P(i) = C(n-f, i) C(f, ell-i) / C(n, ell) over i in [0, ell].
std::vector<double> mutation_good_dist(int n, int f, int ell);

// Distribution of the maximum of `capacity` i.i.d. draws from dist.
std::vector<double> best_of(std::span<const double> dist, int capacity);

// Truncated fitness change of a single crossover offspring built from a
// winner with g good flips among ell: delta = max{0, 2g - ell, dg - db} with
// dg ~ Bin(g, 1/lambda), db ~ Bin(ell - g, 1/lambda). Indexed over [0, ell].
std::vector<double> crossover_truncated_dist(int ell, int g, double lambda);

}  // namespace ollga
