#include <cmath>

#include "doctest.h"
#include "ollga/exact_dp.hpp"
#include "ollga/optimal_policy.hpp"
#include "ollga/rng.hpp"

using namespace ollga;

TEST_CASE("single-bit instance is trivially solved") {
  DpEvaluator dp(1);
  std::vector<double> T{0.0, 0.0};
  const auto [lambda, value] = optimal_lambda_at(dp, 0, T);
  CHECK(lambda == 1.0);
  CHECK(value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("level optimum matches a fine grid search at n=100") {
  const int n = 100;
  DpEvaluator dp(n);
  std::vector<double> T(static_cast<std::size_t>(n) + 1, 0.0);
  const auto [lambda, value] = optimal_lambda_at(dp, n - 1, T);

  double grid_best = 1e300;
  double grid_lambda = 0.0;
  for (int i = 0; i <= 99000; ++i) {
    const double l = 1.0 + i * 1e-3;
    const auto col = dp.remaining_time(n - 1, l, round_nearest(l), T);
    if (col.ok && col.value < grid_best) {
      grid_best = col.value;
      grid_lambda = l;
    }
  }
  CHECK(value <= grid_best + 1e-9);
  CHECK(std::abs(value - grid_best) / grid_best <= 1e-6);
  CHECK(std::abs(lambda - grid_lambda) <= 0.51);  // same or adjacent capacity interval
}

TEST_CASE("pruned search equals the exhaustive fallback at n=64") {
  const int n = 64;
  DpEvaluator dp(n);
  IntervalSearchConfig pruned;
  IntervalSearchConfig full;
  full.exhaustive = true;
  const auto a = optimal_policy(dp, pruned);
  const auto b = optimal_policy(dp, full);
  CHECK(a.table.total == doctest::Approx(b.table.total).epsilon(1e-12));
  for (int f = 0; f < n; ++f) {
    CHECK(a.policy.lambda_at(f) == doctest::Approx(b.policy.lambda_at(f)).epsilon(1e-9));
    CHECK(a.table.T[f] == doctest::Approx(b.table.T[f]).epsilon(1e-12));
  }
}

TEST_CASE("optimal policy dominates reference policies at n=64") {
  const int n = 64;
  DpEvaluator dp(n);
  const auto solved = optimal_policy(dp);
  const double best = solved.table.total;

  CHECK(best <= dp.policy_runtime(theory_policy(n), RoundingMode::nearest()).total + 1e-9);
  for (auto anchor : {Anchor::Start, Anchor::Middle, Anchor::End}) {
    const auto bt = binned_theory_policy(n, BinScheme::max_bins(n), anchor);
    CHECK(best <= dp.policy_runtime(bt.expand(), RoundingMode::nearest()).total + 1e-9);
  }
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> lambdas(static_cast<std::size_t>(n));
    for (auto& v : lambdas) v = 1.0 + rng.next_unit() * (n - 1);
    CHECK(best <= dp.policy_runtime(Policy(n, lambdas), RoundingMode::nearest()).total + 1e-9);
  }
}

TEST_CASE("per-level perturbations never help at n=32") {
  const int n = 32;
  DpEvaluator dp(n);
  const auto solved = optimal_policy(dp);
  for (int f : {0, 7, 15, 23, 28, 31}) {
    for (double d : {-0.25, 0.25}) {
      auto lambdas = solved.policy.lambdas;
      const double perturbed = lambdas[static_cast<std::size_t>(f)] + d;
      if (perturbed < 1.0 || perturbed > n) continue;
      lambdas[static_cast<std::size_t>(f)] = perturbed;
      const auto rt = dp.policy_runtime(Policy(n, lambdas), RoundingMode::nearest());
      CHECK(rt.total >= solved.table.total - 1e-9);
    }
  }
}
