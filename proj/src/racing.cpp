#include "ollga/racing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ollga/parallel.hpp"
#include "ollga/rng.hpp"
#include "ollga/simulator.hpp"

namespace ollga {

namespace {

constexpr std::uint64_t kSeedSaltRace = 0x52;
constexpr std::uint64_t kSeedSaltSample = 0x53;
constexpr std::uint64_t kSeedSaltValidation = 0x56;
constexpr std::uint64_t kSeedSaltCascade = 0x43;

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double beta_cf(double a, double b, double x) {
  // Lentz's continued fraction for the regularized incomplete beta.
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b)) / a;
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x);
  return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - log_beta(b, a)) / b *
                   beta_cf(b, a, 1.0 - x);
}

// One-sided P(T > t) for Student's t with df degrees of freedom.
double student_upper_p(double t, int df) {
  const double x = df / (df + t * t);
  const double half_tail = 0.5 * reg_inc_beta(df / 2.0, 0.5, x);
  return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

struct Candidate {
  int id = 0;
  std::vector<double> params;
  std::vector<double> results;  // per completed seed; capped runs hold the bound
  bool alive = true;

  double mean() const {
    return results.empty() ? 1e300
                           : std::accumulate(results.begin(), results.end(), 0.0) /
                                 static_cast<double>(results.size());
  }
};

std::uint64_t effective_cap(const TuningScenario& sc) {
  return sc.per_run_eval_cap ? sc.per_run_eval_cap : 25ULL * static_cast<std::uint64_t>(sc.n);
}

double run_one(const TuningScenario& sc, const Policy& policy, std::uint64_t seed,
               std::uint64_t cap, std::uint64_t* evals_out, bool* capped_out) {
  RunConfig rc;
  rc.accounting = Accounting::StopAtOptimum;
  rc.eval_cap = cap;
  const RunRecord rec = run_ga(sc.n, policy, RoundingMode::nearest(), seed, rc);
  *evals_out = rec.evaluations;
  *capped_out = rec.status == RunStatus::Capped;
  return static_cast<double>(rec.evaluations);
}

// Frozen capping bound for the next seed row: best mean so far.
std::uint64_t frozen_bound(const TuningScenario& sc, const std::vector<Candidate>& cands) {
  if (!sc.capping) return effective_cap(sc);
  double best = 1e300;
  for (const auto& c : cands)
    if (!c.results.empty()) best = std::min(best, c.mean());
  if (best >= 1e300) return effective_cap(sc);
  const double bound = std::ceil(sc.cap_multiplier * best);
  return std::min<std::uint64_t>(effective_cap(sc),
                                 static_cast<std::uint64_t>(std::max(1.0, bound)));
}

void eliminate_losers(const TuningScenario& sc, std::vector<Candidate>& cands) {
  // Paired one-sided t-test of every live candidate against the best mean.
  int best = -1;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (!cands[i].alive) continue;
    if (best < 0 || cands[i].mean() < cands[static_cast<std::size_t>(best)].mean())
      best = static_cast<int>(i);
  }
  if (best < 0) return;
  const auto& ref = cands[static_cast<std::size_t>(best)].results;
  for (auto& cand : cands) {
    if (!cand.alive || &cand.results == &ref) continue;
    const std::size_t m = std::min(cand.results.size(), ref.size());
    if (m < 2) continue;
    double mean_d = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean_d += cand.results[i] - ref[i];
    mean_d /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = cand.results[i] - ref[i] - mean_d;
      var += d * d;
    }
    var /= static_cast<double>(m - 1);
    if (var == 0.0) {
      if (mean_d > 0.0) cand.alive = false;
      continue;
    }
    const double t = mean_d / std::sqrt(var / static_cast<double>(m));
    if (student_upper_p(t, static_cast<int>(m) - 1) < sc.confidence) cand.alive = false;
  }
}

std::vector<double> sample_around(const std::vector<double>& elite, double sd, double lo,
                                  double hi, Rng& rng) {
  std::vector<double> out(elite.size());
  for (std::size_t j = 0; j < elite.size(); ++j) {
    double v = 0.0;
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      const double u1 = 1.0 - rng.next_unit();
      const double u2 = rng.next_unit();
      const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
      v = elite[j] + sd * z;
      ok = v >= lo && v <= hi;
    }
    out[j] = std::clamp(v, lo, hi);
  }
  return out;
}

}  // namespace

int TuningScenario::dimensions() const {
  switch (space) {
    case ParamSpace::Static: return 1;
    case ParamSpace::Binned: return bins;
    case ParamSpace::Naive: return n;
  }
  return 1;
}

void TuningScenario::validate() const {
  if (n < 1) throw std::invalid_argument("TuningScenario: n must be >= 1");
  if (space == ParamSpace::Binned && (bins < 1 || bins > BinScheme::max_bins(n)))
    throw std::invalid_argument("TuningScenario: bins out of range");
  if (first_test < 2) throw std::invalid_argument("TuningScenario: first_test must be >= 2");
  if (!(confidence > 0.0 && confidence < 0.5))
    throw std::invalid_argument("TuningScenario: confidence must lie in (0, 0.5)");
  if (run_budget < 2ULL * static_cast<std::uint64_t>(first_test))
    throw std::invalid_argument(
        "TuningScenario: budget cannot cover one first test of two candidates");
}

Policy assemble_policy(const TuningScenario& scenario, const std::vector<double>& params) {
  switch (scenario.space) {
    case ParamSpace::Static:
      return Policy::constant(scenario.n, params.at(0));
    case ParamSpace::Binned:
      return BinnedPolicy(BinScheme::geometric(scenario.n, scenario.bins), params).expand();
    case ParamSpace::Naive:
      return Policy(scenario.n, params);
  }
  throw std::logic_error("assemble_policy: bad space");
}

TuneResult tune(const TuningScenario& scenario, const std::vector<std::vector<double>>& injected) {
  scenario.validate();
  const int dim = scenario.dimensions();
  const double lo = 1.0, hi = static_cast<double>(scenario.n);
  Rng sampler(derive_seed(scenario.master_seed, kSeedSaltSample, 0));

  TuneResult result;
  std::uint64_t remaining = scenario.run_budget;
  int next_id = 0;

  // Enough iterations that the geometric sampling decay can localize the
  // optimum; bounded by what the budget can feed.
  const int iterations = std::max(
      6, std::min(40, static_cast<int>(scenario.run_budget /
                                       (static_cast<std::uint64_t>(scenario.first_test) * 10))));
  (void)dim;
  std::vector<double> split(static_cast<std::size_t>(iterations));
  double norm = 0.0;
  for (int j = 0; j < iterations; ++j) {
    split[static_cast<std::size_t>(j)] = std::pow(scenario.budget_growth, j);
    norm += split[static_cast<std::size_t>(j)];
  }
  for (auto& s : split) s = s / norm * static_cast<double>(scenario.run_budget);

  std::vector<EliteRecord> elites;
  double carry = 0.0;

  for (int iter = 0; iter < iterations && remaining > 0; ++iter) {
    const double budget_j_f = split[static_cast<std::size_t>(iter)] + carry;
    std::uint64_t budget_j =
        std::min<std::uint64_t>(remaining, static_cast<std::uint64_t>(budget_j_f));
    if (iter == iterations - 1) budget_j = remaining;  // spend everything at the end
    if (budget_j < static_cast<std::uint64_t>(2 * scenario.first_test)) {
      carry = static_cast<double>(budget_j);
      continue;
    }

    // Candidate pool: surviving elites, injected configurations (first
    // iteration), fresh samples.
    std::vector<Candidate> cands;
    auto add_candidate = [&](std::vector<double> params) {
      Candidate c;
      c.id = next_id++;
      c.params = std::move(params);
      cands.push_back(std::move(c));
    };
    for (const auto& e : elites) add_candidate(e.params);
    if (iter == 0)
      for (const auto& p : injected)
        if (static_cast<int>(p.size()) == dim) add_candidate(p);
    const int target = std::max(scenario.elite_count + 2,
                                static_cast<int>(budget_j / (scenario.first_test + 4)));
    const int cap_candidates = 64;
    while (static_cast<int>(cands.size()) < std::min(target, cap_candidates)) {
      if (elites.empty() || cands.size() < 2) {
        std::vector<double> p(static_cast<std::size_t>(dim));
        for (auto& v : p) v = lo + sampler.next_unit() * (hi - lo);
        add_candidate(std::move(p));
      } else {
        const auto& e = elites[sampler.next_below(elites.size())];
        const double sd = (hi - lo) * std::pow(scenario.sampling_decay, iter + 1);
        add_candidate(sample_around(e.params, sd, lo, hi, sampler));
      }
    }

    std::vector<Policy> policies;
    policies.reserve(cands.size());
    for (const auto& c : cands) policies.push_back(assemble_policy(scenario, c.params));

    // The race: seed-major loop with a capping bound frozen per row.
    std::uint64_t used_j = 0;
    for (int t = 0; t < scenario.max_seeds_per_race; ++t) {
      std::vector<std::size_t> live;
      for (std::size_t i = 0; i < cands.size(); ++i)
        if (cands[i].alive) live.push_back(i);
      if (live.size() <= 1) break;
      if (budget_j - used_j < live.size()) break;

      const std::uint64_t bound = frozen_bound(scenario, cands);
      const std::uint64_t seed =
          derive_seed(scenario.master_seed, kSeedSaltRace + 101ULL * static_cast<std::uint64_t>(iter),
                      static_cast<std::uint64_t>(t));

      std::vector<std::uint64_t> evals(live.size());
      std::vector<char> capped(live.size());
      std::vector<double> values(live.size());
      ThreadPool::global().parallel_for(0, live.size(), [&](std::size_t i) {
        std::uint64_t e = 0;
        bool c = false;
        values[i] = run_one(scenario, policies[live[i]], seed, bound, &e, &c);
        evals[i] = e;
        capped[i] = c;
      });
      for (std::size_t i = 0; i < live.size(); ++i) {
        cands[live[i]].results.push_back(values[i]);
        result.audit.push_back({iter, cands[live[i]].id, static_cast<std::uint64_t>(t), evals[i],
                                static_cast<bool>(capped[i])});
      }
      used_j += live.size();

      if (t + 1 >= scenario.first_test) eliminate_losers(scenario, cands);
    }
    remaining -= used_j;
    carry = static_cast<double>(budget_j - used_j);

    // New elite set: best means among survivors (fall back to all candidates
    // if elimination was too eager).
    std::vector<const Candidate*> ranked;
    for (const auto& c : cands)
      if (!c.results.empty()) ranked.push_back(&c);
    std::stable_sort(ranked.begin(), ranked.end(), [](const Candidate* a, const Candidate* b) {
      return a->mean() < b->mean();
    });
    elites.clear();
    for (const auto* c : ranked) {
      if (static_cast<int>(elites.size()) >= scenario.elite_count) break;
      elites.push_back({c->params, c->mean(), 0.0});
    }
  }
  result.runs_used = scenario.run_budget - remaining;
  if (elites.empty()) throw std::runtime_error("tune: no candidate completed a race");

  // Validation on a fresh, disjoint seed set.
  const std::uint64_t cap = effective_cap(scenario);
  for (auto& e : elites) {
    const Policy policy = assemble_policy(scenario, e.params);
    std::vector<double> vals(static_cast<std::size_t>(scenario.validation_runs));
    ThreadPool::global().parallel_for(0, vals.size(), [&](std::size_t i) {
      std::uint64_t evals = 0;
      bool was_capped = false;
      vals[i] = run_one(scenario, policy,
                        derive_seed(scenario.master_seed, kSeedSaltValidation, i), cap, &evals,
                        &was_capped);
    });
    e.validation_mean = std::accumulate(vals.begin(), vals.end(), 0.0) /
                        std::max<std::size_t>(1, vals.size());
  }
  std::stable_sort(elites.begin(), elites.end(), [](const EliteRecord& a, const EliteRecord& b) {
    return a.validation_mean < b.validation_mean;
  });
  result.elites = elites;
  result.best_params = elites.front().params;
  result.best_policy = assemble_policy(scenario, result.best_params);
  result.validation_mean = elites.front().validation_mean;
  return result;
}

std::vector<double> expand_bin_params(const std::vector<double>& params, int n, int k_from,
                                      int k_to) {
  const BinScheme from = BinScheme::geometric(n, k_from);
  const BinScheme to = BinScheme::geometric(n, k_to);
  if (params.size() != static_cast<std::size_t>(k_from))
    throw std::invalid_argument("expand_bin_params: size mismatch");
  std::vector<double> out(static_cast<std::size_t>(k_to));
  for (int i = 0; i < k_to; ++i)
    out[static_cast<std::size_t>(i)] =
        params[static_cast<std::size_t>(from.bin_of(to.bin_begin(i)))];
  return out;
}

std::vector<CascadeStage> cascade(int n, int k_max, std::uint64_t per_stage_budget,
                                  const TuningScenario& defaults) {
  if (k_max < 1 || k_max > BinScheme::max_bins(n))
    throw std::invalid_argument("cascade: k_max out of range");
  std::vector<CascadeStage> stages;
  std::vector<std::vector<double>> injected;
  for (int k = 1; k <= k_max; ++k) {
    TuningScenario sc = defaults;
    sc.n = n;
    sc.space = ParamSpace::Binned;
    sc.bins = k;
    sc.run_budget = per_stage_budget;
    sc.master_seed = derive_seed(defaults.master_seed, kSeedSaltCascade, static_cast<std::uint64_t>(k));
    CascadeStage stage;
    stage.k = k;
    stage.result = tune(sc, injected);
    injected.clear();
    if (k < k_max)
      injected.push_back(expand_bin_params(stage.result.best_params, n, k, k + 1));
    stages.push_back(std::move(stage));
  }
  return stages;
}

std::uint64_t race_evaluation_cost(const TuningScenario& scenario,
                                   const std::vector<std::vector<double>>& candidates,
                                   int seed_count, bool capping) {
  TuningScenario sc = scenario;
  sc.capping = capping;
  std::vector<Candidate> cands;
  std::vector<Policy> policies;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    Candidate c;
    c.id = static_cast<int>(i);
    c.params = candidates[i];
    cands.push_back(std::move(c));
    policies.push_back(assemble_policy(sc, candidates[i]));
  }
  std::uint64_t total = 0;
  for (int t = 0; t < seed_count; ++t) {
    const std::uint64_t bound = frozen_bound(sc, cands);
    const std::uint64_t seed = derive_seed(sc.master_seed, kSeedSaltRace, static_cast<std::uint64_t>(t));
    for (std::size_t i = 0; i < cands.size(); ++i) {
      std::uint64_t evals = 0;
      bool was_capped = false;
      const double v = run_one(sc, policies[i], seed, bound, &evals, &was_capped);
      cands[i].results.push_back(v);
      total += evals;
    }
  }
  return total;
}

}  // namespace ollga
