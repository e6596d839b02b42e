#include <cmath>
#include <limits>

#include "doctest.h"
#include "ollga/io.hpp"
#include "ollga/policy.hpp"
#include "ollga/rng.hpp"

using namespace ollga;

TEST_CASE("theory policy values") {
  const Policy p = theory_policy(100);
  CHECK(p.lambda_at(0) == 1.0);
  CHECK(p.lambda_at(99) == 10.0);
  CHECK(p.lambda_at(96) == 5.0);
  for (int f = 1; f < 100; ++f) CHECK(p.lambda_at(f) >= p.lambda_at(f - 1));
  CHECK(p.lambda_at(99) <= std::sqrt(100.0));
}

TEST_CASE("round_nearest halves go up") {
  CHECK(round_nearest(6.5) == 7);
  CHECK(round_nearest(std::nextafter(6.5, 0.0)) == 6);
  CHECK(round_nearest(1.0) == 1);
  CHECK(round_nearest(11.5) == 12);

  Rng rng(99);
  for (int i = 0; i < 2000; ++i) {
    const double x = 1.0 + rng.next_unit() * 900.0;
    CHECK(round_nearest(x + 1.0) == round_nearest(x) + 1);
  }
}

TEST_CASE("geometric bin schemes") {
  const BinScheme s = BinScheme::geometric(20, 4);
  CHECK(s.boundaries == std::vector<int>{0, 10, 15, 18});
  CHECK(s.bin_begin(0) == 0);
  CHECK(s.bin_end(0) == 9);
  CHECK(s.bin_begin(1) == 10);
  CHECK(s.bin_end(1) == 14);
  CHECK(s.bin_begin(3) == 18);
  CHECK(s.bin_end(3) == 20);

  const BinScheme one = BinScheme::geometric(20, 1);
  CHECK(one.k == 1);
  CHECK(one.bin_begin(0) == 0);
  CHECK(one.bin_end(0) == 20);

  const BinScheme big = BinScheme::geometric(500, 9);
  CHECK(big.boundaries == std::vector<int>{0, 250, 375, 438, 469, 485, 493, 497, 499});
  CHECK(big.bin_begin(8) == 499);
  CHECK(big.bin_end(8) == 500);

  CHECK_THROWS(BinScheme::geometric(20, 0));
  CHECK_THROWS(BinScheme::geometric(20, 6));  // ceil(log2 20) = 5
  CHECK(BinScheme::max_bins(500) == 9);
  CHECK(BinScheme::max_bins(1000) == 10);
  CHECK(BinScheme::max_bins(2000) == 11);
}

TEST_CASE("bin boundaries are k-prefix independent") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(3000));
    const int kmax = BinScheme::max_bins(n);
    const int ka = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(kmax)));
    const int kb = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(kmax)));
    const BinScheme a = BinScheme::geometric(n, ka);
    const BinScheme b = BinScheme::geometric(n, kb);
    for (int i = 0; i < std::min(ka, kb); ++i) CHECK(a.boundaries[i] == b.boundaries[i]);
  }
}

TEST_CASE("binned theory anchors") {
  const auto start = binned_theory_policy(20, 4, Anchor::Start);
  CHECK(start.lambda_of_bin(1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  const auto end = binned_theory_policy(20, 4, Anchor::End);
  CHECK(end.lambda_of_bin(1) == doctest::Approx(std::sqrt(20.0 / 6.0)).epsilon(1e-15));
  const auto mid = binned_theory_policy(20, 4, Anchor::Middle);
  CHECK(mid.lambda_of_bin(2) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
}

TEST_CASE("binned policies expand by bin membership") {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(400));
    const int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(BinScheme::max_bins(n))));
    BinScheme scheme = BinScheme::geometric(n, k);
    std::vector<double> lambdas(static_cast<std::size_t>(k));
    for (auto& v : lambdas) v = 1.0 + rng.next_unit() * (n - 1);
    const BinnedPolicy bp(scheme, lambdas);
    const Policy p = bp.expand();
    for (int f = 0; f < n; ++f) CHECK(p.lambda_at(f) == bp.lambda_of_bin(scheme.bin_of(f)));
  }
}

TEST_CASE("arbitrary boundary constructor accepts shifted partitions") {
  const BinScheme shifted = BinScheme::from_boundaries(100, {0, 51, 76, 89, 95, 98, 100});
  CHECK(shifted.k == 7);
  CHECK(shifted.bin_end(0) == 50);
  CHECK(shifted.bin_begin(6) == 100);
  CHECK_THROWS(BinScheme::from_boundaries(100, {1, 50}));
  CHECK_THROWS(BinScheme::from_boundaries(100, {0, 50, 50}));
}

TEST_CASE("policy serialization round-trips bit-exactly") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(200));
    std::vector<double> lambdas(static_cast<std::size_t>(n));
    for (auto& v : lambdas) {
      v = 1.0 + rng.next_unit() * (n - 1);
      if (rng.next_below(4) == 0) v = std::nextafter(std::floor(v) + 0.5, 0.0);
    }
    const Policy p(n, lambdas);
    const auto spec = PolicySpec::from_policy(p);

    const auto via_json = PolicySpec::from_json_string(spec.to_json_string());
    REQUIRE(via_json.lambdas.size() == lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) CHECK(via_json.lambdas[i] == lambdas[i]);

    const auto via_csv = PolicySpec::from_csv_string(spec.to_csv_string());
    REQUIRE(via_csv.lambdas.size() == lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) CHECK(via_csv.lambdas[i] == lambdas[i]);
  }
}

TEST_CASE("binned serialization keeps scheme and capacities") {
  BinnedPolicy bp(BinScheme::geometric(100, 7), {83.9611, 1.0, 1.0, 1.4670, 3.0433, 4.8120, 6.9308});
  auto spec = PolicySpec::from_binned(bp);
  spec.capacities = {3, 1, 1, 5, 8, 12, 19};
  const auto back = PolicySpec::from_json_string(spec.to_json_string());
  CHECK(back.binned);
  CHECK(back.boundaries == spec.boundaries);
  CHECK(back.capacities == spec.capacities);
  const auto table = back.capacity_table();
  REQUIRE(table.size() == 100);
  CHECK(table[0] == 3);
  CHECK(table[99] == 19);
  const Policy p = back.to_policy();
  CHECK(p.lambda_at(0) == 83.9611);
  CHECK(p.lambda_at(99) == 6.9308);
}

TEST_CASE("invalid domain values are rejected") {
  CHECK_THROWS(Policy(3, {0.5, 1.0, 1.0}));
  CHECK_THROWS(Policy(3, {1.0, 1.0}));
  CHECK_THROWS(theory_policy(0));
  CHECK_THROWS(RoundingMode::decoupled({1, 2}).validate(3));
  CHECK_THROWS(RoundingMode::decoupled({1, 2, 9}).validate(3));
}
