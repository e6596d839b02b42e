#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "ollga/exact_dp.hpp"
#include "ollga/policy.hpp"
#include "ollga/racing.hpp"

using namespace ollga;

namespace {

TuningScenario small_scenario() {
  TuningScenario sc;
  sc.n = 20;
  sc.space = ParamSpace::Binned;
  sc.bins = 2;
  sc.run_budget = 600;
  sc.first_test = 5;
  sc.validation_runs = 50;
  sc.master_seed = 12;
  return sc;
}

}  // namespace

TEST_CASE("budget respected and elites produced") {
  const auto sc = small_scenario();
  const auto res = tune(sc);
  CHECK(res.runs_used <= sc.run_budget);
  CHECK(res.audit.size() == res.runs_used);
  CHECK(!res.elites.empty());
  CHECK(res.best_params.size() == 2);
  for (double v : res.best_params) CHECK((v >= 1.0 && v <= 20.0));
}

TEST_CASE("budget too small for one first test is rejected") {
  auto sc = small_scenario();
  sc.run_budget = 9;  // < 2 * first_test
  CHECK_THROWS(tune(sc));
}

TEST_CASE("tuning is reproducible from the master seed") {
  const auto sc = small_scenario();
  const auto a = tune(sc);
  const auto b = tune(sc);
  CHECK(a.validation_mean == b.validation_mean);
  CHECK(a.runs_used == b.runs_used);
  REQUIRE(a.best_params.size() == b.best_params.size());
  for (std::size_t i = 0; i < a.best_params.size(); ++i)
    CHECK(a.best_params[i] == b.best_params[i]);
}

TEST_CASE("races pair candidates on common seed prefixes") {
  const auto sc = small_scenario();
  const auto res = tune(sc);
  // Within an iteration the seed indices a candidate saw form a prefix
  // 0..m-1, and a candidate with fewer seeds than its iteration's longest
  // survivor was eliminated, which only happens from first_test on.
  std::map<std::pair<int, int>, std::vector<std::uint64_t>> seen;
  for (const auto& row : res.audit) seen[{row.iteration, row.candidate}].push_back(row.seed_index);
  std::map<int, std::size_t> longest;
  for (auto& [key, seeds] : seen) {
    std::sort(seeds.begin(), seeds.end());
    for (std::size_t i = 0; i < seeds.size(); ++i) CHECK(seeds[i] == i);
    longest[key.first] = std::max(longest[key.first], seeds.size());
  }
  for (auto& [key, seeds] : seen)
    if (seeds.size() < longest[key.first])
      CHECK(seeds.size() >= static_cast<std::size_t>(sc.first_test));
}

TEST_CASE("capping can only reduce the evaluation bill") {
  TuningScenario sc = small_scenario();
  sc.n = 60;
  std::vector<std::vector<double>> candidates{{1.5, 3.0}, {30.0, 55.0}, {2.0, 8.0}};
  const auto with_cap = race_evaluation_cost(sc, candidates, 8, true);
  const auto without_cap = race_evaluation_cost(sc, candidates, 8, false);
  CHECK(with_cap <= without_cap);
}

TEST_CASE("validation seeds are disjoint from racing seeds") {
  // Racing seeds and validation seeds come from different derivation salts;
  // checked indirectly: validation mean of the winner is finite and the
  // audit holds only racing rows.
  const auto res = tune(small_scenario());
  CHECK(res.validation_mean > 0.0);
  for (const auto& row : res.audit) CHECK(row.seed_index < 64);
}

TEST_CASE("static tuning approaches the single-parameter optimum") {
  TuningScenario sc;
  sc.n = 100;
  sc.space = ParamSpace::Static;
  sc.run_budget = 10000;
  sc.validation_runs = 300;
  sc.master_seed = 4;
  const auto res = tune(sc);

  DpEvaluator dp(100);
  // 1-D scan oracle over capacity intervals.
  double scan_best = 1e300;
  for (int x = 1; x <= 100; ++x) {
    double lo = x == 1 ? 1.0 : x - 0.5;
    double hi = x == 100 ? 100.0 : std::nextafter(x + 0.5, 0.0);
    auto value = [&](double l) {
      return dp.policy_runtime(Policy::constant(100, l), RoundingMode::nearest()).total;
    };
    for (int it = 0; it < 40; ++it) {
      const double m1 = lo + (hi - lo) / 3.0;
      const double m2 = hi - (hi - lo) / 3.0;
      if (value(m1) <= value(m2))
        hi = m2;
      else
        lo = m1;
    }
    scan_best = std::min(scan_best, std::min(value(lo), value(hi)));
  }
  const double tuned_total =
      dp.policy_runtime(res.best_policy, RoundingMode::nearest()).total;
  CHECK(tuned_total <= 1.05 * scan_best);
}

TEST_CASE("bin expansion inherits the split bin's value") {
  CHECK(expand_bin_params({7.0}, 20, 1, 2) == std::vector<double>{7.0, 7.0});
  CHECK(expand_bin_params({3.0, 9.0}, 20, 2, 3) == std::vector<double>{3.0, 9.0, 9.0});
  // Boundaries are prefix-stable, so earlier bins keep their values.
  const auto grown = expand_bin_params({2.0, 4.0, 6.0}, 500, 3, 4);
  CHECK(grown == std::vector<double>{2.0, 4.0, 6.0, 6.0});
}

TEST_CASE("cascade stages are reproducible and well-formed") {
  TuningScenario defaults;
  defaults.first_test = 5;
  defaults.validation_runs = 40;
  defaults.master_seed = 77;
  const auto a = cascade(32, 3, 400, defaults);
  const auto b = cascade(32, 3, 400, defaults);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a[i].k == static_cast<int>(i) + 1);
    CHECK(a[i].result.best_params.size() == i + 1);
    CHECK(a[i].result.validation_mean == b[i].result.validation_mean);
  }
}
