#include "ollga/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "ollga/parallel.hpp"

namespace ollga {

namespace {

std::vector<double> probe_points(const SweepSpec& spec) {
  std::vector<double> points;
  const auto count = static_cast<long long>(std::floor((spec.hi - spec.lo) / spec.step + 1e-9));
  for (long long i = 0; i <= count; ++i) points.push_back(spec.lo + static_cast<double>(i) * spec.step);
  if (spec.half_predecessors) {
    for (double h = std::floor(spec.lo) + 0.5; h <= spec.hi; h += 1.0) {
      if (h < spec.lo) continue;
      const double pred = std::nextafter(h, 0.0);
      if (pred >= spec.lo) points.push_back(pred);
      points.push_back(h);
    }
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return points;
}

Policy with_bin_value(const SweepSpec& spec, double lambda) {
  BinnedPolicy bp = spec.base;
  bp.lambdas[static_cast<std::size_t>(spec.bin_index)] = lambda;
  return bp.expand();
}

std::vector<SweepRow> sweep_policy_values(const SweepSpec& spec,
                                          const std::function<double(double)>& total_of) {
  const auto points = probe_points(spec);
  std::vector<SweepRow> rows(points.size());
  ThreadPool::global().parallel_for(0, points.size(), [&](std::size_t i) {
    rows[i] = {points[i], total_of(points[i])};
  });
  return rows;
}

}  // namespace

void SweepSpec::validate() const {
  const int n = base.scheme.n;
  if (bin_index < 0 || bin_index >= base.scheme.k)
    throw std::invalid_argument("SweepSpec: bin index out of range");
  if (!(lo >= 1.0 && hi <= static_cast<double>(n) && lo <= hi))
    throw std::invalid_argument("SweepSpec: range must lie within [1, n]");
  if (!(step > 0.0)) throw std::invalid_argument("SweepSpec: step must be positive");
}

std::vector<SweepRow> sweep_1d(const DpEvaluator& dp, const SweepSpec& spec,
                               const RoundingMode& rounding) {
  spec.validate();
  return sweep_policy_values(spec, [&](double lambda) {
    return dp.policy_runtime(with_bin_value(spec, lambda), rounding).total;
  });
}

std::vector<SweepRow> sweep_1d_fixed_capacity(const DpEvaluator& dp, const SweepSpec& spec,
                                              int capacity) {
  spec.validate();
  const int n = spec.base.scheme.n;
  if (capacity < 1 || capacity > n)
    throw std::invalid_argument("sweep_1d_fixed_capacity: capacity out of [1, n]");
  return sweep_policy_values(spec, [&](double lambda) {
    const Policy policy = with_bin_value(spec, lambda);
    std::vector<int> caps(static_cast<std::size_t>(n));
    for (int f = 0; f < n; ++f) caps[static_cast<std::size_t>(f)] = round_nearest(policy.lambda_at(f));
    const auto& scheme = spec.base.scheme;
    const int end = std::min(scheme.bin_end(spec.bin_index), n - 1);
    for (int f = scheme.bin_begin(spec.bin_index); f <= end; ++f)
      caps[static_cast<std::size_t>(f)] = capacity;
    return dp.policy_runtime_explicit(policy, caps).total;
  });
}

std::vector<Sweep2Row> sweep_lambda_capacity(const DpEvaluator& dp, const SweepSpec& spec,
                                             int cap_lo, int cap_hi) {
  spec.validate();
  if (cap_lo < 1 || cap_hi > spec.base.scheme.n || cap_lo > cap_hi)
    throw std::invalid_argument("sweep_lambda_capacity: bad capacity range");
  std::vector<Sweep2Row> rows;
  for (int cap = cap_lo; cap <= cap_hi; ++cap) {
    const auto slice = sweep_1d_fixed_capacity(dp, spec, cap);
    for (const auto& r : slice) rows.push_back({r.lambda, static_cast<double>(cap), r.total});
  }
  return rows;
}

std::vector<Sweep2Row> sweep_two_bins(const DpEvaluator& dp, const SweepSpec& spec,
                                      int second_bin, const RoundingMode& rounding) {
  spec.validate();
  if (second_bin < 0 || second_bin >= spec.base.scheme.k || second_bin == spec.bin_index)
    throw std::invalid_argument("sweep_two_bins: bad second bin");
  const auto points = probe_points(spec);
  std::vector<Sweep2Row> rows(points.size() * points.size());
  ThreadPool::global().parallel_for(0, rows.size(), [&](std::size_t idx) {
    const std::size_t i = idx / points.size();
    const std::size_t j = idx % points.size();
    BinnedPolicy bp = spec.base;
    bp.lambdas[static_cast<std::size_t>(spec.bin_index)] = points[i];
    bp.lambdas[static_cast<std::size_t>(second_bin)] = points[j];
    rows[idx] = {points[i], points[j], dp.policy_runtime(bp.expand(), rounding).total};
  });
  return rows;
}

SawtoothReport analyze_sawtooth(const std::vector<SweepRow>& rows, double threshold_factor) {
  SawtoothReport report;
  report.threshold_factor = threshold_factor;
  if (rows.size() < 3) return report;

  auto is_half = [](double x) {
    const double frac = x - std::floor(x);
    return std::abs(frac - 0.5) < 1e-12;
  };

  // Adjacent changes, split into "within an interval" and "across a
  // half-integer" (the pair pred(h) -> h).
  std::vector<double> within;
  struct Crossing {
    double at;
    double jump;
  };
  std::vector<Crossing> crossings;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double change = std::abs(rows[i].total - rows[i - 1].total);
    if (is_half(rows[i].lambda) && rows[i].lambda - rows[i - 1].lambda < 1e-9)
      crossings.push_back({rows[i].lambda, change});
    else
      within.push_back(change);
  }
  if (within.empty()) return report;
  std::vector<double> sorted = within;
  std::sort(sorted.begin(), sorted.end());
  report.median_step = sorted[sorted.size() / 2];
  report.max_within_step = sorted.back();
  const double threshold = threshold_factor * report.median_step;
  for (const auto& c : crossings) {
    if (c.jump > threshold)
      report.jump_points.push_back(c.at);
    else
      report.missed_points.push_back(c.at);
  }
  return report;
}

}  // namespace ollga
