#pragma once

#include <vector>

#include "ollga/policy.hpp"

namespace ollga {

// Brute-force expected-runtime oracle for n <= 8. Transition probabilities
// come from exhaustive enumeration (all flip sets, all crossover outcomes,
// max-of-capacity by pairwise convolution) with compensated summation, and the
// remaining times solve the triangular linear system over fitness levels.
// Entirely independent of the dynamic-programming evaluator: no logs, no
// caches, no truncation.
std::vector<double> oracle_runtime_table(int n, const Policy& policy,
                                         const RoundingMode& rounding);
double oracle_runtime_total(int n, const Policy& policy, const RoundingMode& rounding);

}  // namespace ollga
