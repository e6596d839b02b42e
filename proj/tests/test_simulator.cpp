#include <cmath>
#include <cstdint>

#include "doctest.h"
#include "ollga/policy.hpp"
#include "ollga/rng.hpp"
#include "ollga/simulator.hpp"

using namespace ollga;

TEST_CASE("single-bit runs cost one or two evaluations") {
  const Policy p = Policy::constant(1, 1.0);
  int ones = 0;
  for (int s = 0; s < 400; ++s) {
    const auto rec = run_ga(1, p, RoundingMode::nearest(), derive_seed(9, 0, s));
    REQUIRE((rec.evaluations == 1 || rec.evaluations == 2));
    CHECK(rec.final_fitness == 1);
    ones += rec.evaluations == 1;
  }
  CHECK(ones > 120);  // initialized at the optimum with probability 1/2
  CHECK(ones < 280);
}

TEST_CASE("sample_ell degenerate and truncated-mean cases") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) CHECK(sample_ell(1, 1.0, rng) == 1);
  for (int i = 0; i < 200; ++i) CHECK(sample_ell(37, 37.0, rng) == 37);

  const int n = 100;
  const double lambda = 2.0;
  const double p = lambda / n;
  const double expected = lambda / (1.0 - std::pow(1.0 - p, n));
  const int draws = 1000000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto v = static_cast<double>(sample_ell(n, lambda, rng));
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sumsq / draws - mean * mean) / draws);
  CHECK(std::abs(mean - expected) <= 3.0 * se);
}

TEST_CASE("population_size per rounding mode") {
  Rng rng(4);
  CHECK(population_size(11.5, RoundingMode::nearest(), 0, rng) == 12);
  CHECK(population_size(11.4999, RoundingMode::nearest(), 0, rng) == 11);

  for (int i = 0; i < 100; ++i)
    CHECK(population_size(3.0, RoundingMode::stochastic(), 0, rng) == 3);

  int fours = 0;
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i)
    fours += population_size(3.25, RoundingMode::stochastic(), 0, rng) == 4;
  const double freq = static_cast<double>(fours) / draws;
  const double se = std::sqrt(0.25 * 0.75 / draws);
  CHECK(std::abs(freq - 0.25) <= 3.0 * se);

  const auto dec = RoundingMode::decoupled({5, 2, 9});
  CHECK(population_size(1.0, dec, 0, rng) == 5);
  CHECK(population_size(1.0, dec, 2, rng) == 9);
}

TEST_CASE("runs are deterministic and elitist") {
  const int n = 40;
  const Policy p = theory_policy(n);
  RunConfig rc;
  rc.record_trace = true;
  for (std::uint64_t seed : {7ull, 8ull, 99ull}) {
    const auto a = run_ga(n, p, RoundingMode::stochastic(), seed, rc);
    const auto b = run_ga(n, p, RoundingMode::stochastic(), seed, rc);
    CHECK(a.evaluations == b.evaluations);
    CHECK(a.iterations == b.iterations);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
      CHECK(a.trace[i].ell == b.trace[i].ell);
      CHECK(a.trace[i].evaluations == b.trace[i].evaluations);
      if (i) CHECK(a.trace[i].fitness >= a.trace[i - 1].fitness);  // elitism
    }
    // Total = initial evaluation plus per-iteration counts.
    std::uint64_t total = 1;
    for (const auto& t : a.trace) total += t.evaluations;
    CHECK(total == a.evaluations);
  }
}

TEST_CASE("unit lambda spends exactly capacity evaluations per iteration") {
  const int n = 30;
  const Policy p = Policy::constant(n, 1.0);
  RunConfig rc;
  rc.record_trace = true;
  const auto rec = run_ga(n, p, RoundingMode::nearest(), 424242, rc);
  for (const auto& t : rec.trace) CHECK(t.evaluations == 1);  // crossover all copies
}

TEST_CASE("two-bit mean matches the hand-computed expectation") {
  const Policy p = Policy::constant(2, 1.0);
  const int runs = 1000000;
  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < runs; ++r) {
    const auto rec = run_ga(2, p, RoundingMode::nearest(), derive_seed(12, 0, r));
    sum += static_cast<double>(rec.evaluations);
    sumsq += static_cast<double>(rec.evaluations) * static_cast<double>(rec.evaluations);
  }
  const double mean = sum / runs;
  const double se = std::sqrt((sumsq / runs - mean * mean) / runs);
  CHECK(std::abs(mean - 3.25) <= 3.0 * se);  // 1 initial evaluation + 2.25
}

TEST_CASE("stop_at_optimum never exceeds full_iteration counting") {
  const int n = 60;
  const Policy p = theory_policy(n);
  for (int s = 0; s < 200; ++s) {
    RunConfig full, stop;
    stop.accounting = Accounting::StopAtOptimum;
    const auto a = run_ga(n, p, RoundingMode::nearest(), derive_seed(1, 2, s), full);
    const auto b = run_ga(n, p, RoundingMode::nearest(), derive_seed(1, 2, s), stop);
    CHECK(b.evaluations <= a.evaluations);
    CHECK(a.final_fitness == n);
    CHECK(b.final_fitness == n);
  }
}

TEST_CASE("evaluation cap yields a capped record") {
  const Policy p = Policy::constant(200, 200.0);  // hopeless flip-everything policy
  RunConfig rc;
  rc.eval_cap = 500;
  const auto rec = run_ga(200, p, RoundingMode::nearest(), 5, rc);
  CHECK(rec.status == RunStatus::Capped);
  CHECK(rec.evaluations >= 500);
  CHECK(rec.final_fitness < 200);
}

TEST_CASE("simulator mean tracks the n=500 baseline total") {
  const BinnedPolicy best(BinScheme::geometric(500, 9), {1, 1, 1, 1, 6.5, 8.5, 11.5, 16.5, 24.5});
  const Policy p = best.expand();
  const int runs = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < runs; ++r) {
    const auto rec = run_ga(500, p, RoundingMode::nearest(), derive_seed(77, 3, r));
    const double v = static_cast<double>(rec.evaluations);
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / runs;
  const double se = std::sqrt((sumsq / runs - mean * mean) / runs);
  CHECK(std::abs(mean - (2925.52 + 1.0)) <= 3.0 * se);
}
