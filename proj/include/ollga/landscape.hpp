#pragma once

#include <vector>

#include "ollga/exact_dp.hpp"
#include "ollga/policy.hpp"

namespace ollga {

struct SweepSpec {
  BinnedPolicy base;
  int bin_index = 0;        // swept bin
  double lo = 1.0;
  double hi = 40.0;
  double step = 0.1;
  bool half_predecessors = true;  // add the float right below every half-integer
  void validate() const;
};

struct SweepRow {
  double lambda;
  double total;
};

struct Sweep2Row {
  double a;  // swept lambda (or first bin value)
  double b;  // capacity (or second bin value)
  double total;
};

// Exact totals along one bin value; probes are the regular grid plus, when
// requested, the predecessor float of every half-integer in range.
std::vector<SweepRow> sweep_1d(const DpEvaluator& dp, const SweepSpec& spec,
                               const RoundingMode& rounding);

// Same sweep with the swept bin's population size pinned (other bins keep
// nearest rounding); isolates the smooth fixed-capacity slice.
std::vector<SweepRow> sweep_1d_fixed_capacity(const DpEvaluator& dp, const SweepSpec& spec,
                                              int capacity);

// lambda x capacity grid over the swept bin.
std::vector<Sweep2Row> sweep_lambda_capacity(const DpEvaluator& dp, const SweepSpec& spec,
                                             int cap_lo, int cap_hi);

// Two-bin grid: spec.bin_index and second_bin both swept over the same range.
std::vector<Sweep2Row> sweep_two_bins(const DpEvaluator& dp, const SweepSpec& spec,
                                      int second_bin, const RoundingMode& rounding);

struct SawtoothReport {
  double median_step = 0.0;          // median |adjacent change| within intervals
  double max_within_step = 0.0;      // largest within-interval change
  std::vector<double> jump_points;   // half-integers with a detected jump
  std::vector<double> missed_points; // half-integers without one
  double threshold_factor = 10.0;
};

// Detects discontinuities at half-integers: a jump counts when the change
// across pred(x+0.5) -> x+0.5 exceeds threshold_factor times the median
// adjacent step within intervals.
SawtoothReport analyze_sawtooth(const std::vector<SweepRow>& rows, double threshold_factor = 10.0);

}  // namespace ollga
