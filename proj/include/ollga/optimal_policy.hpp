#pragma once

#include <span>
#include <vector>

#include "ollga/exact_dp.hpp"
#include "ollga/policy.hpp"

namespace ollga {

struct IntervalSearchConfig {
  double epsilon = 1e-8;    // boundary probe offset inside each interval
  double tolerance = 1e-9;  // final bracket width of the interior refinement
  int scan_points = 16;     // uniform pre-scan guarding against multimodal slices
  int batch = 4;            // interior probes per refinement step
  bool exhaustive = false;  // evaluate every interval instead of pruning
  void validate() const;
};

struct FitnessDecision {
  int fitness = 0;
  double lambda = 1.0;
  double value = 0.0;
  int intervals_probed = 0;
  int intervals_refined = 0;
  int column_evals = 0;
  bool interior = false;  // optimum strictly inside an interval
};

struct SolveResult {
  Policy policy;
  RuntimeTable table;
  std::vector<FitnessDecision> decisions;
};

// Best lambda at one fitness level, given remaining times for all higher
// levels. Searches the per-capacity intervals [x-0.5, x+0.5) (first [1, 1.5),
// last [n-0.5, n]; open ends realized as the predecessor float), probing both
// boundaries, boundary+-epsilon, and refining interior optima. Pruning keeps
// capacities 1 and 2, an ascending run from 2 when capacity 3 improves on 2,
// and a descending run from n when the coarse capacity probes at
// n, n-n/8, n-n/4, n-n/2 are not monotonically decreasing.
std::pair<double, double> optimal_lambda_at(const DpEvaluator& dp, int f,
                                            std::span<const double> T,
                                            const IntervalSearchConfig& config = {},
                                            FitnessDecision* decision = nullptr);

// Backward induction over all fitness levels.
SolveResult optimal_policy(const DpEvaluator& dp, const IntervalSearchConfig& config = {});

}  // namespace ollga
