#pragma once

#include <cstdint>
#include <vector>

#include "ollga/policy.hpp"

namespace ollga {

enum class ParamSpace { Static, Binned, Naive };

struct TuningScenario {
  int n = 100;
  ParamSpace space = ParamSpace::Binned;
  int bins = 1;                    // Binned space only
  std::uint64_t run_budget = 5000; // simulator runs spent on racing
  int first_test = 10;             // seeds before the first elimination test
  double confidence = 0.05;        // one-sided paired t-test level
  bool capping = true;
  double cap_multiplier = 1.2;     // abort at multiplier * best mean so far
  int elite_count = 3;
  double sampling_decay = 0.85;    // per-iteration shrink of the sampling sd
  double budget_growth = 1.08;     // geometric split of the budget over iterations
  std::uint64_t master_seed = 1;
  std::uint64_t per_run_eval_cap = 0;  // 0: 25 * n evaluations
  int validation_runs = 200;
  int max_seeds_per_race = 40;

  int dimensions() const;
  void validate() const;
};

struct AuditRow {
  int iteration;
  int candidate;
  std::uint64_t seed_index;
  std::uint64_t evaluations;
  bool capped;
};

struct EliteRecord {
  std::vector<double> params;
  double race_mean = 0.0;
  double validation_mean = 0.0;
};

struct TuneResult {
  std::vector<double> best_params;
  Policy best_policy;
  double validation_mean = 0.0;
  std::uint64_t runs_used = 0;
  std::vector<EliteRecord> elites;
  std::vector<AuditRow> audit;
};

Policy assemble_policy(const TuningScenario& scenario, const std::vector<double>& params);

// Iterated racing: sample candidates (uniform first, then truncated normals
// around random elites with geometrically decaying spread), race them on
// common seeds with paired t-test elimination and adaptive capping, repeat
// until the budget is spent, then pick the elite with the best mean on a
// fresh validation seed set.
TuneResult tune(const TuningScenario& scenario,
                const std::vector<std::vector<double>>& injected = {});

struct CascadeStage {
  int k = 1;
  TuneResult result;
};

// Runs tune for k = 1..k_max bins; each stage's winner is expanded (a split
// bin hands its value to both children) and injected into the next stage.
std::vector<CascadeStage> cascade(int n, int k_max, std::uint64_t per_stage_budget,
                                  const TuningScenario& defaults);

// Grows a k-bin parameter vector onto a finer scheme: every new bin inherits
// the value of the old bin containing its first fitness level.
std::vector<double> expand_bin_params(const std::vector<double>& params, int n, int k_from,
                                      int k_to);

// Evaluation cost (total simulator evaluations) of racing a fixed candidate
// set over the first `seed_count` common seeds, with or without capping;
// exposes the capping-budget invariant for tests.
std::uint64_t race_evaluation_cost(const TuningScenario& scenario,
                                   const std::vector<std::vector<double>>& candidates,
                                   int seed_count, bool capping);

}  // namespace ollga
