#pragma once

#include <optional>
#include <string>
#include <vector>

namespace ollga {

// Rounds a real parameter to the population size: down below .5, up from .5.
int round_nearest(double lambda);

// Fitness-indexed parameter table; entry f holds lambda for parent fitness f,
// f in [0, n-1]. All values must lie in [1, n].
struct Policy {
  int n = 0;
  std::vector<double> lambdas;

  Policy() = default;
  Policy(int n_, std::vector<double> lambdas_);
  static Policy constant(int n, double lambda);

  double lambda_at(int fitness) const { return lambdas[static_cast<std::size_t>(fitness)]; }
  void validate() const;
};

// Geometric partition of the objective space [0, n] into k bins that shrink
// toward the optimum: boundary i is n - floor(n / 2^(i-1)). Also accepts
// arbitrary increasing boundaries for nonstandard partitions.
struct BinScheme {
  int n = 0;
  int k = 0;
  std::vector<int> boundaries;  // size k, boundaries[0] == 0

  static int max_bins(int n);
  static BinScheme geometric(int n, int k);
  static BinScheme from_boundaries(int n, std::vector<int> boundaries);

  int bin_begin(int i) const { return boundaries[static_cast<std::size_t>(i)]; }
  // Last bin includes fitness n (no parameter is ever read there).
  int bin_end(int i) const {
    return i + 1 < k ? boundaries[static_cast<std::size_t>(i) + 1] - 1 : n;
  }
  int bin_of(int fitness) const;
};

struct BinnedPolicy {
  BinScheme scheme;
  std::vector<double> lambdas;  // one per bin

  BinnedPolicy() = default;
  BinnedPolicy(BinScheme scheme_, std::vector<double> lambdas_);

  double lambda_of_bin(int i) const { return lambdas[static_cast<std::size_t>(i)]; }
  Policy expand() const;
};

struct RoundingMode {
  enum class Kind { Nearest, Stochastic, Decoupled };
  Kind kind = Kind::Nearest;
  std::vector<int> capacities;  // Decoupled only: per-fitness population size

  static RoundingMode nearest() { return {Kind::Nearest, {}}; }
  static RoundingMode stochastic() { return {Kind::Stochastic, {}}; }
  static RoundingMode decoupled(std::vector<int> capacities);
  void validate(int n) const;
};

// pi(f) = sqrt(n / (n - f)), the fitness-dependent setting with proven
// super-constant speedup over any static choice.
Policy theory_policy(int n);
double theory_lambda(int n, int fitness);

enum class Anchor { Start, Middle, End };

// Binned variant of the theory policy: each bin takes the theory value at its
// start, middle (smaller point on ties) or end.
BinnedPolicy binned_theory_policy(int n, int k, Anchor anchor);

const char* anchor_name(Anchor a);
std::optional<Anchor> anchor_from_name(const std::string& name);

}  // namespace ollga
