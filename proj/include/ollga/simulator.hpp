#pragma once

#include <cstdint>
#include <vector>

#include "ollga/policy.hpp"
#include "ollga/rng.hpp"

namespace ollga {

// full_iteration counts every evaluation of the final iteration (matching the
// expected-runtime recurrences); stop_at_optimum stops counting at the first
// evaluation that hits the optimum.
enum class Accounting { FullIteration, StopAtOptimum };

enum class RunStatus { ReachedOptimum, Capped };

struct IterationTrace {
  int fitness;                 // parent fitness entering the iteration
  double lambda;
  int capacity;
  int ell;
  std::uint64_t evaluations;   // evaluations spent in this iteration
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::uint64_t evaluations = 0;  // includes the initial evaluation
  std::uint64_t iterations = 0;
  RunStatus status = RunStatus::ReachedOptimum;
  int final_fitness = 0;
  std::vector<IterationTrace> trace;
};

struct RunConfig {
  Accounting accounting = Accounting::FullIteration;
  // 0 selects the default cap of 100 * n^2 evaluations; runs that hit the cap
  // return status Capped instead of failing.
  std::uint64_t eval_cap = 0;
  bool record_trace = false;
};

// One draw from Binomial(n, lambda/n) conditioned on being positive
// (i.i.d. resampling until nonzero).
int sample_ell(int n, double lambda, Rng& rng);

// Population size for the current iteration under the given rounding mode.
// Stochastic consumes exactly one uniform draw.
int population_size(double lambda, const RoundingMode& rounding, int fitness, Rng& rng);

// Runs the GA on OneMax until the parent reaches fitness n (or the cap).
//
// RNG draw order per iteration: (1) ell (rejection draws as needed);
// (2) stochastic-rounding draw, when that mode is active; (3) per mutant, its
// flip positions; (4) one tie-break draw choosing the best mutant; (5) per
// crossover offspring, one Bernoulli per differing position (skipped entirely
// when the bias is 1); (6) one tie-break draw for the best evaluated
// offspring, only when at least one offspring was evaluated.
RunRecord run_ga(int n, const Policy& policy, const RoundingMode& rounding, std::uint64_t seed,
                 const RunConfig& config = {});

// Evaluation count of one iteration started from a uniformly random parent
// with the given fitness; exposes the per-iteration cost for tests.
std::uint64_t simulate_iteration_evals(int n, int fitness, double lambda, int capacity, Rng& rng);

}  // namespace ollga
