#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ollga {

struct EsConfig {
  int population = 100;
  int iterations = 200;
  double sigma0 = 0.3;           // initial step size, relative to the box width
  double degeneration = 1e-12;   // stop once every coordinate step falls below
  std::uint64_t seed = 1;
  int threads = 0;  // informational; evaluation uses the global pool
};

struct EsResult {
  std::vector<double> best_x;
  double best_value = 0.0;
  int generations = 0;
  bool degenerate = false;            // stopped by step-size collapse
  std::vector<double> best_history;   // best-so-far after each generation
};

// Evolution strategy with diagonal covariance adaptation (rank-one and
// rank-mu updates restricted to the diagonal, cumulative step-size
// adaptation). Box constraints are handled by resampling a candidate up to
// ten times and coordinate-wise reflection afterwards. Fully deterministic
// for a fixed seed; candidate evaluations run on the global thread pool.
EsResult sep_cmaes_minimize(const std::function<double(std::span<const double>)>& objective,
                            std::span<const double> lower, std::span<const double> upper,
                            const EsConfig& config);

}  // namespace ollga
