#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ollga/exact_dp.hpp"
#include "ollga/policy.hpp"
#include "ollga/sep_cmaes.hpp"

namespace ollga {

// Smoothing reparametrization: each bin parameter is a pair (coarse, fine) in
// [0, 1), decoded as lambda = clamp(round(coarse * n) + fine - 0.5, 1, n).
// Separating the integer part from the in-interval offset removes the
// half-integer cliffs from the optimizer's view of the landscape.
double decode_lambda(double coarse, double fine, int n);
BinnedPolicy decode_reparam(std::span<const double> vec, const BinScheme& scheme);

enum class BinnedObjective { Nearest, Stochastic };

struct BinnedOptConfig {
  EsConfig es;
  int restarts = 10;
  std::uint64_t master_seed = 1;
  // The search runs against a coarser-truncation evaluator (order 1e-8
  // relative error); winners are re-scored with the caller's evaluator.
  double objective_log_cutoff = 18.0;
};

struct BinnedOptResult {
  BinnedPolicy policy;
  std::vector<int> capacities;  // per bin; empty unless decoupled
  double total = 0.0;
  int restarts_run = 0;
  // Per restart: best exact total after each generation.
  std::vector<std::vector<double>> convergence;
};

// Best binned policy under nearest or stochastic rounding, optimizing all bin
// values simultaneously through the reparametrization; the objective is the
// exact expected runtime.
BinnedOptResult optimize_binned(const DpEvaluator& dp, const BinScheme& scheme,
                                BinnedObjective objective, const BinnedOptConfig& config);

// Decoupled variant: per bin, lambda (reparametrized) plus an integer
// population size encoded as one extra dimension.
BinnedOptResult optimize_binned_decoupled(const DpEvaluator& dp, const BinScheme& scheme,
                                          const BinnedOptConfig& config);

// Straightforward encoding: each decision variable is the raw bin value in
// [1, n]; exists to compare rounding modes' tunability.
BinnedOptResult naive_direct_optimize(const DpEvaluator& dp, const BinScheme& scheme,
                                      BinnedObjective objective, const BinnedOptConfig& config);

}  // namespace ollga
