#include <bit>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "ollga/exact_dp.hpp"
#include "ollga/io.hpp"
#include "ollga/kernels/kernels.hpp"
#include "ollga/policy.hpp"
#include "ollga/rng.hpp"
#include "ollga/simulator.hpp"

using namespace ollga;

namespace {

// Enumeration oracle: distribution of good flips over all C(n, ell) flip sets.
std::vector<double> enumerate_good_dist(int n, int f, int ell) {
  std::vector<long long> counts(static_cast<std::size_t>(ell) + 1, 0);
  std::vector<int> subset(static_cast<std::size_t>(ell));
  for (int i = 0; i < ell; ++i) subset[static_cast<std::size_t>(i)] = i;
  long long total = 0;
  for (;;) {
    int good = 0;
    for (int v : subset) good += v >= f;
    ++counts[static_cast<std::size_t>(good)];
    ++total;
    int pos = ell - 1;
    while (pos >= 0 && subset[static_cast<std::size_t>(pos)] == n - ell + pos) --pos;
    if (pos < 0) break;
    ++subset[static_cast<std::size_t>(pos)];
    for (int i = pos + 1; i < ell; ++i)
      subset[static_cast<std::size_t>(i)] = subset[static_cast<std::size_t>(i - 1)] + 1;
  }
  std::vector<double> dist(static_cast<std::size_t>(ell) + 1);
  for (int g = 0; g <= ell; ++g)
    dist[static_cast<std::size_t>(g)] = static_cast<double>(counts[static_cast<std::size_t>(g)]) / total;
  return dist;
}

double binom_pmf(int n, int k, double p) {
  double coeff = 1.0;
  for (int i = 0; i < k; ++i) coeff = coeff * (n - i) / (i + 1);
  return coeff * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

}  // namespace

TEST_CASE("mutation_good_dist hypergeometric") {
  const auto d = mutation_good_dist(4, 2, 2);
  CHECK(d[0] == doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(4.0 / 6).epsilon(1e-12));
  CHECK(d[2] == doctest::Approx(1.0 / 6).epsilon(1e-12));

  const auto all_good = mutation_good_dist(12, 0, 5);
  CHECK(all_good[5] == doctest::Approx(1.0).epsilon(1e-12));

  const auto mine = mutation_good_dist(10, 7, 3);
  const auto ref = enumerate_good_dist(10, 7, 3);
  for (int g = 0; g <= 3; ++g) CHECK(mine[g] == doctest::Approx(ref[g]).epsilon(1e-11));
  CHECK(std::accumulate(mine.begin(), mine.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("best_of order statistics") {
  const auto base = mutation_good_dist(10, 7, 3);
  const auto same = best_of(base, 1);
  for (std::size_t i = 0; i < base.size(); ++i)
    CHECK(same[i] == doctest::Approx(base[i]).epsilon(1e-12));

  const std::vector<double> coin{0.5, 0.5};
  const auto two = best_of(coin, 2);
  CHECK(two[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(two[1] == doctest::Approx(0.75).epsilon(1e-12));

  // Monte-Carlo oracle for max of 5 draws.
  const auto five = best_of(base, 5);
  Rng rng(77);
  std::vector<double> cdf(base.size());
  std::partial_sum(base.begin(), base.end(), cdf.begin());
  const int trials = 1000000;
  std::vector<int> counts(base.size(), 0);
  for (int t = 0; t < trials; ++t) {
    int best = 0;
    for (int k = 0; k < 5; ++k) {
      const double u = rng.next_unit();
      int v = 0;
      while (cdf[static_cast<std::size_t>(v)] <= u) ++v;
      best = std::max(best, v);
    }
    ++counts[static_cast<std::size_t>(best)];
  }
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double freq = static_cast<double>(counts[i]) / trials;
    const double sigma = std::sqrt(std::max(five[i] * (1 - five[i]), 1e-12) / trials);
    CHECK(std::abs(freq - five[i]) <= 3.5 * sigma + 1e-9);
  }
  CHECK(std::accumulate(five.begin(), five.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("crossover_truncated_dist") {
  // bias 1 always copies the winner.
  const auto copy = crossover_truncated_dist(5, 3, 1.0);
  CHECK(copy[1] == 1.0);  // max(0, 2*3-5)

  const auto fallback = crossover_truncated_dist(1, 1, 2.0);
  CHECK(fallback[1] == doctest::Approx(1.0).epsilon(1e-12));

  // Enumeration oracle over (dg, db) pairs.
  const int ell = 3, g = 2;
  const double lambda = 2.5, c = 1.0 / lambda;
  std::vector<double> ref(static_cast<std::size_t>(ell) + 1, 0.0);
  for (int a = 0; a <= g; ++a)
    for (int b = 0; b <= ell - g; ++b)
      ref[static_cast<std::size_t>(std::max({0, 2 * g - ell, a - b}))] +=
          binom_pmf(g, a, c) * binom_pmf(ell - g, b, c);
  const auto mine = crossover_truncated_dist(ell, g, lambda);
  for (int i = 0; i <= ell; ++i) CHECK(mine[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  CHECK(std::accumulate(mine.begin(), mine.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("iteration cost") {
  DpEvaluator dp(100);
  // lambda = 1: crossover phase never evaluates anything.
  CHECK(dp.iteration_cost(1.0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dp.iteration_cost(1.0, 7) == doctest::Approx(7.0).epsilon(1e-12));

  // Simulation oracle at a matched state: mean per-iteration evaluations.
  const double lambda = 5.0;
  const int capacity = 5;
  const double tau = dp.iteration_cost(lambda, capacity);
  Rng rng(123);
  const int trials = 300000;
  double sum = 0.0, sumsq = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto e = static_cast<double>(simulate_iteration_evals(100, 50, lambda, capacity, rng));
    sum += e;
    sumsq += e * e;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt((sumsq / trials - mean * mean) / trials);
  CHECK(std::abs(mean - tau) <= 3.5 * sd);
}

TEST_CASE("remaining_time small cases") {
  {
    DpEvaluator dp(1);
    std::vector<double> T{0.0, 0.0};
    const auto col = dp.remaining_time(0, 1.0, 1, T);
    REQUIRE(col.ok);
    CHECK(col.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(col.outcome.p_improve == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    DpEvaluator dp(2);
    std::vector<double> T{0.0, 0.0, 0.0};
    const auto c1 = dp.remaining_time(1, 1.0, 1, T);
    REQUIRE(c1.ok);
    CHECK(c1.value == doctest::Approx(3.0).epsilon(1e-12));
    T[1] = c1.value;
    const auto c0 = dp.remaining_time(0, 1.0, 1, T);
    REQUIRE(c0.ok);
    CHECK(c0.value == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(c0.outcome.p_improve == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c0.outcome.t_cond == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("policy_runtime hand values and conventions") {
  DpEvaluator dp(2);
  const auto rt = dp.policy_runtime(Policy::constant(2, 1.0), RoundingMode::nearest());
  CHECK(rt.T[2] == 0.0);
  CHECK(rt.T[1] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(rt.T[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(rt.total == doctest::Approx(2.25).epsilon(1e-12));
}

TEST_CASE("explicit capacities reproduce nearest rounding") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(25));
    std::vector<double> lambdas(static_cast<std::size_t>(n));
    for (auto& v : lambdas) v = 1.0 + rng.next_unit() * (n - 1);
    const Policy p(n, lambdas);
    DpEvaluator dp(n);
    std::vector<int> caps(static_cast<std::size_t>(n));
    for (int f = 0; f < n; ++f) caps[static_cast<std::size_t>(f)] = round_nearest(p.lambda_at(f));
    const auto a = dp.policy_runtime(p, RoundingMode::nearest());
    const auto b = dp.policy_runtime_explicit(p, caps);
    for (int f = 0; f <= n; ++f)
      CHECK(std::bit_cast<std::uint64_t>(a.T[f]) == std::bit_cast<std::uint64_t>(b.T[f]));
  }
}

TEST_CASE("stochastic equals nearest for integer-valued policies") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(25));
    std::vector<double> lambdas(static_cast<std::size_t>(n));
    for (auto& v : lambdas) v = 1.0 + static_cast<double>(rng.next_below(static_cast<std::uint64_t>(n)));
    const Policy p(n, lambdas);
    DpEvaluator dp(n);
    const auto a = dp.policy_runtime(p, RoundingMode::nearest());
    const auto b = dp.policy_runtime(p, RoundingMode::stochastic());
    for (int f = 0; f <= n; ++f)
      CHECK(std::bit_cast<std::uint64_t>(a.T[f]) == std::bit_cast<std::uint64_t>(b.T[f]));
  }
}

TEST_CASE("theory runtime table decreases in fitness") {
  for (int n : {50, 200}) {
    DpEvaluator dp(n);
    const auto rt = dp.policy_runtime(theory_policy(n), RoundingMode::nearest());
    for (int f = 1; f <= n; ++f) CHECK(rt.T[f] < rt.T[f - 1]);
  }
}

TEST_CASE("runtime is invariant under the kernel backend") {
  using kernels::Backend;
  if (!(kernels::avx2::compiled() && kernels::avx2::supported())) {
    MESSAGE("avx2 unavailable; skipping");
    return;
  }
  const Policy p = theory_policy(60);
  const auto before = kernels::active_backend();
  kernels::set_backend(Backend::Scalar);
  const auto a = DpEvaluator(60).policy_runtime(p, RoundingMode::nearest());
  kernels::set_backend(Backend::Avx2);
  const auto b = DpEvaluator(60).policy_runtime(p, RoundingMode::nearest());
  kernels::set_backend(before);
  CHECK(std::bit_cast<std::uint64_t>(a.total) == std::bit_cast<std::uint64_t>(b.total));
  for (int f = 0; f <= 60; ++f)
    CHECK(std::bit_cast<std::uint64_t>(a.T[f]) == std::bit_cast<std::uint64_t>(b.T[f]));
}

TEST_CASE("reference totals for n=500 baselines") {
  DpEvaluator dp(500);
  const BinnedPolicy best_binned(BinScheme::geometric(500, 9),
                                 {1, 1, 1, 1, 6.5, 8.5, 11.5, 16.5, 24.5});
  const auto rt = dp.policy_runtime(best_binned.expand(), RoundingMode::nearest());
  CHECK(std::abs(rt.total - 2925.52) <= 0.01);

  const auto theory = dp.policy_runtime(theory_policy(500), RoundingMode::nearest());
  CHECK(std::abs(theory.total - 3224.89) <= 0.01);
}

TEST_CASE("n=100 decoupled and nearest reference rows") {
  DpEvaluator dp(100);
  // Both partition conventions for the published 7-bin values; the formula
  // convention is the one that matches, the shifted variant is reported.
  const std::vector<int> formula_bounds{0, 50, 75, 88, 94, 97, 99};
  const std::vector<int> shifted_bounds{0, 51, 76, 89, 95, 98, 100};

  const std::vector<double> dec_lambda{83.9611, 1.0, 1.0, 1.4670, 3.0433, 4.8120, 6.9308};
  const std::vector<int> dec_cap{3, 1, 1, 5, 8, 12, 19};
  const std::vector<double> near_lambda{1.0, 1.0, 1.0, 3.5, 5.5, 7.5, 10.5};

  double best_dec = 1e18, best_near = 1e18;
  for (const auto& bounds : {formula_bounds, shifted_bounds}) {
    PolicySpec spec;
    spec.n = 100;
    spec.binned = true;
    spec.boundaries = bounds;
    spec.lambdas = dec_lambda;
    spec.capacities = dec_cap;
    const auto rt = dp.policy_runtime_explicit(spec.to_policy(), spec.capacity_table());
    best_dec = std::min(best_dec, std::abs(rt.total - 488.9785));

    PolicySpec nspec;
    nspec.n = 100;
    nspec.binned = true;
    nspec.boundaries = bounds;
    nspec.lambdas = near_lambda;
    const auto nrt = dp.policy_runtime(nspec.to_policy(), RoundingMode::nearest());
    best_near = std::min(best_near, std::abs(nrt.total - 534.3011));
  }
  CHECK(best_dec <= 0.01);
  CHECK(best_near <= 0.01);
}

TEST_CASE("column aggregation is consistent with the composable pieces") {
  // Rebuild one remaining-time column from the public distributions and
  // compare against the evaluator.
  const int n = 30, f = 24;
  const double lambda = 3.7;
  const int capacity = round_nearest(lambda);
  DpEvaluator dp(n);
  std::vector<double> T(static_cast<std::size_t>(n) + 1, 0.0);
  for (int ff = n - 1; ff > f; --ff)
    T[static_cast<std::size_t>(ff)] = dp.remaining_time(ff, lambda, capacity, T).value;

  // Composed reference.
  double p_imp = 0.0, t_sum = 0.0, wsum = 0.0;
  const double p = lambda / n;
  std::vector<double> ell_pmf(static_cast<std::size_t>(n) + 1, 0.0);
  for (int ell = 0; ell <= n; ++ell) ell_pmf[static_cast<std::size_t>(ell)] = binom_pmf(n, ell, p);
  const double keep = 1.0 - ell_pmf[0];
  for (int ell = 1; ell <= n; ++ell) {
    const double pl = ell_pmf[static_cast<std::size_t>(ell)] / keep;
    const double c = 1.0 / lambda;
    wsum += pl * (1.0 - std::pow(c, ell) - std::pow(1.0 - c, ell));
    const auto winners = best_of(mutation_good_dist(n, f, ell), capacity);
    for (int g = 0; g <= ell; ++g) {
      const double pg = winners[static_cast<std::size_t>(g)];
      if (pg < 1e-18) continue;
      const auto deltas = best_of(crossover_truncated_dist(ell, g, lambda), capacity);
      for (int delta = 1; delta <= ell; ++delta) {
        const double pd = deltas[static_cast<std::size_t>(delta)];
        p_imp += pl * pg * pd;
        t_sum += pl * pg * pd * T[static_cast<std::size_t>(std::min(n, f + delta))];
      }
    }
  }
  const double tau = capacity * (1.0 + wsum);
  const double t_ref = (tau + t_sum) / p_imp;
  const auto col = dp.remaining_time(f, lambda, capacity, T);
  CHECK(col.value == doctest::Approx(t_ref).epsilon(1e-10));
  CHECK(col.outcome.p_improve == doctest::Approx(p_imp).epsilon(1e-10));
  CHECK(col.outcome.cost == doctest::Approx(tau).epsilon(1e-10));
}
