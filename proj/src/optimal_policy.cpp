#include "ollga/optimal_policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "ollga/parallel.hpp"

namespace ollga {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Candidate {
  double value = kInf;
  double lambda = kInf;
  void offer(double v, double l) {
    if (v < value || (v == value && l < lambda)) {
      value = v;
      lambda = l;
    }
  }
};

struct LevelSearch {
  const DpEvaluator& dp;
  const int f;
  std::span<const double> T;
  const IntervalSearchConfig& cfg;
  const int n;

  std::unordered_map<std::uint64_t, double> memo;
  int evals = 0;

  LevelSearch(const DpEvaluator& dp_, int f_, std::span<const double> T_,
              const IntervalSearchConfig& cfg_)
      : dp(dp_), f(f_), T(T_), cfg(cfg_), n(dp_.n()) {}

  double interval_lo(int x) const { return x == 1 ? 1.0 : x - 0.5; }
  double interval_hi(int x) const {
    return x == n ? static_cast<double>(n) : std::nextafter(x + 0.5, 0.0);
  }

  double eval(double lambda, int capacity) {
    const auto key = std::bit_cast<std::uint64_t>(lambda);
    if (const auto it = memo.find(key); it != memo.end()) return it->second;
    const auto col = dp.remaining_time(f, lambda, capacity, T);
    const double v = col.ok ? col.value : kInf;
    ++evals;
    memo.emplace(key, v);
    return v;
  }

  // Evaluates a list of lambdas concurrently; results land in the memo.
  void eval_batch(const std::vector<double>& lambdas, int capacity) {
    std::vector<double> todo;
    todo.reserve(lambdas.size());
    for (double l : lambdas)
      if (!memo.contains(std::bit_cast<std::uint64_t>(l))) todo.push_back(l);
    if (todo.size() > 1) {
      std::vector<double> values(todo.size());
      ThreadPool::global().parallel_for(0, todo.size(), [&](std::size_t i) {
        const auto col = dp.remaining_time(f, todo[i], capacity, T);
        values[i] = col.ok ? col.value : kInf;
      });
      for (std::size_t i = 0; i < todo.size(); ++i) {
        memo.emplace(std::bit_cast<std::uint64_t>(todo[i]), values[i]);
        ++evals;
      }
    } else {
      for (double l : todo) eval(l, capacity);
    }
  }

  struct IntervalEval {
    double probe_value = kInf;  // best of the four boundary probes
    double probe_lambda = kInf;
    bool interior = false;
  };

  IntervalEval probe(int x) {
    IntervalEval out;
    const double lo = interval_lo(x);
    const double hi = interval_hi(x);
    if (hi <= lo) {  // degenerate (n == 1)
      out.probe_value = eval(lo, x);
      out.probe_lambda = lo;
      return out;
    }
    const double a = std::min(lo + cfg.epsilon, hi);
    const double b = std::max(hi - cfg.epsilon, lo);
    eval_batch({lo, a, b, hi}, x);
    Candidate best;
    for (double l : {lo, a, b, hi}) best.offer(eval(l, x), l);
    out.probe_value = best.value;
    out.probe_lambda = best.lambda;
    out.interior = eval(a, x) < eval(lo, x) && eval(b, x) < eval(hi, x);
    return out;
  }

  // Full search of one interval: boundary probes plus, when the edge slopes
  // point inward, a uniform scan and a batched ternary refinement.
  Candidate refine(int x, bool* interior_flag = nullptr) {
    Candidate best;
    const IntervalEval ie = probe(x);
    best.offer(ie.probe_value, ie.probe_lambda);
    if (interior_flag) *interior_flag = ie.interior;
    if (!ie.interior) return best;

    const double lo = interval_lo(x);
    const double hi = interval_hi(x);
    const int points = std::max(cfg.scan_points, 4);
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
      grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * (i + 1) / (points + 1);
    eval_batch(grid, x);
    Candidate scan_best;
    for (double l : grid) scan_best.offer(eval(l, x), l);
    best.offer(scan_best.value, scan_best.lambda);

    // Bracket around the best scanned point, then shrink with `batch` probes
    // per step until the width drops under the tolerance.
    const double step = (hi - lo) / (points + 1);
    double a = std::max(lo, scan_best.lambda - step);
    double b = std::min(hi, scan_best.lambda + step);
    const int batch = std::max(cfg.batch, 2);
    while (b - a > cfg.tolerance) {
      std::vector<double> probes(static_cast<std::size_t>(batch));
      for (int i = 0; i < batch; ++i)
        probes[static_cast<std::size_t>(i)] = a + (b - a) * (i + 1) / (batch + 1);
      eval_batch(probes, x);
      int arg = 0;
      for (int i = 1; i < batch; ++i) {
        if (eval(probes[static_cast<std::size_t>(i)], x) <
            eval(probes[static_cast<std::size_t>(arg)], x))
          arg = i;
      }
      best.offer(eval(probes[static_cast<std::size_t>(arg)], x),
                 probes[static_cast<std::size_t>(arg)]);
      const double na = arg == 0 ? a : probes[static_cast<std::size_t>(arg - 1)];
      const double nb = arg == batch - 1 ? b : probes[static_cast<std::size_t>(arg + 1)];
      if (nb - na >= b - a) break;  // no further contraction possible (float limits)
      a = na;
      b = nb;
    }
    return best;
  }
};

}  // namespace

void IntervalSearchConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 0.25))
    throw std::invalid_argument("IntervalSearchConfig: epsilon must lie in (0, 0.25)");
  if (!(tolerance > 0.0 && tolerance < epsilon))
    throw std::invalid_argument("IntervalSearchConfig: tolerance must lie in (0, epsilon)");
}

std::pair<double, double> optimal_lambda_at(const DpEvaluator& dp, int f,
                                            std::span<const double> T,
                                            const IntervalSearchConfig& config,
                                            FitnessDecision* decision) {
  config.validate();
  const int n = dp.n();
  if (f < 0 || f >= n) throw std::invalid_argument("optimal_lambda_at: fitness out of range");
  LevelSearch search(dp, f, T, config);

  std::map<int, LevelSearch::IntervalEval> probed;
  auto probe_value = [&](int x) {
    auto it = probed.find(x);
    if (it == probed.end()) it = probed.emplace(x, search.probe(x)).first;
    return it->second.probe_value;
  };

  std::vector<int> candidates;
  auto add_candidate = [&](int x) {
    if (x >= 1 && x <= n) candidates.push_back(x);
  };

  if (config.exhaustive || n <= 4) {
    for (int x = 1; x <= n; ++x) add_candidate(x);
  } else {
    add_candidate(1);
    add_candidate(2);
    // Ascending run from 2, triggered when capacity 3 beats capacity 2;
    // typical near the optimum.
    if (probe_value(3) < probe_value(2)) {
      int x = 3;
      while (x + 1 <= n && probe_value(x + 1) < probe_value(x)) ++x;
      add_candidate(x - 1);
      add_candidate(x);
      add_candidate(x + 1);
    } else {
      add_candidate(3);
    }
    // Descending run from n, triggered when the coarse probes are not
    // monotonically decreasing; typical far from the optimum.
    std::vector<int> coarse{n, n - n / 8, n - n / 4, n - n / 2};
    coarse.erase(std::unique(coarse.begin(), coarse.end()), coarse.end());
    bool monotone = true;
    for (std::size_t i = 1; i < coarse.size(); ++i)
      if (coarse[i] >= 2 && !(probe_value(coarse[i]) < probe_value(coarse[i - 1]))) monotone = false;
    if (!monotone) {
      int x = n;
      while (x - 1 >= 3 && probe_value(x - 1) < probe_value(x)) --x;
      add_candidate(x - 1);
      add_candidate(x);
      add_candidate(x + 1);
    }
  }

  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  Candidate best;
  bool any_interior = false;
  int refined = 0;
  std::vector<char> fully(static_cast<std::size_t>(n) + 1, 0);
  auto refine_interval = [&](int x) {
    if (fully[static_cast<std::size_t>(x)]) return;
    fully[static_cast<std::size_t>(x)] = 1;
    bool interior = false;
    const Candidate c = search.refine(x, &interior);
    any_interior = any_interior || (interior && c.value <= best.value);
    best.offer(c.value, c.lambda);
    ++refined;
  };
  for (int x : candidates) refine_interval(x);

  // Safety net for the pruning heuristic: any probed interval that still
  // beats the refined best gets refined as well.
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& [x, ie] : probed) {
      if (!fully[static_cast<std::size_t>(x)] && ie.probe_value < best.value) {
        refine_interval(x);
        changed = true;
      }
    }
  }

  if (decision) {
    decision->fitness = f;
    decision->lambda = best.lambda;
    decision->value = best.value;
    decision->intervals_probed = static_cast<int>(probed.size());
    decision->intervals_refined = refined;
    decision->column_evals = search.evals;
    decision->interior = any_interior;
  }
  return {best.lambda, best.value};
}

SolveResult optimal_policy(const DpEvaluator& dp, const IntervalSearchConfig& config) {
  const int n = dp.n();
  SolveResult out;
  out.table.n = n;
  out.table.T.assign(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> lambdas(static_cast<std::size_t>(n), 1.0);
  out.decisions.resize(static_cast<std::size_t>(n));
  for (int f = n - 1; f >= 0; --f) {
    FitnessDecision& dec = out.decisions[static_cast<std::size_t>(f)];
    const auto [lambda, value] = optimal_lambda_at(dp, f, out.table.T, config, &dec);
    lambdas[static_cast<std::size_t>(f)] = lambda;
    out.table.T[static_cast<std::size_t>(f)] = value;
  }
  out.policy = Policy(n, std::move(lambdas));
  out.table.total = dp.init_weighted_total(out.table.T);
  return out;
}

}  // namespace ollga
