#include "ollga/markov_oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ollga {

namespace {

constexpr int kMaxOracleN = 8;

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

// Small Pascal triangle in exact integers.
long long choose(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

// Distribution of max(X, Y) with X ~ acc, Y ~ single, by direct convolution.
std::vector<double> max_with(const std::vector<double>& acc, const std::vector<double>& single) {
  std::vector<double> out(acc.size(), 0.0);
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if (acc[i] == 0.0) continue;
    for (std::size_t j = 0; j < single.size(); ++j) {
      if (single[j] == 0.0) continue;
      out[std::max(i, j)] += acc[i] * single[j];
    }
  }
  return out;
}

std::vector<double> max_of(const std::vector<double>& single, int count) {
  std::vector<double> acc = single;
  for (int i = 1; i < count; ++i) acc = max_with(acc, single);
  return acc;
}

// P[ell] of the positive binomial, directly: Bin(n, p) pmf renormalized over
// ell >= 1.
std::vector<double> positive_binomial(int n, double p) {
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1, 0.0);
  for (int ell = 0; ell <= n; ++ell)
    pmf[static_cast<std::size_t>(ell)] = static_cast<double>(choose(n, ell)) *
                                         std::pow(p, ell) * std::pow(1.0 - p, n - ell);
  const double keep = 1.0 - pmf[0];
  std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
  if (keep <= 0.0) {
    out[static_cast<std::size_t>(n)] = 1.0;  // p == 1
    return out;
  }
  for (int ell = 1; ell <= n; ++ell) out[static_cast<std::size_t>(ell)] = pmf[static_cast<std::size_t>(ell)] / keep;
  return out;
}

// Good-flip distribution of one mutant by enumerating every ell-subset of
// positions for a canonical parent with `f` ones.
std::vector<double> good_flip_dist(int n, int f, int ell) {
  std::vector<long long> counts(static_cast<std::size_t>(ell) + 1, 0);
  std::vector<int> subset(static_cast<std::size_t>(ell));
  // Iterative enumeration of combinations of {0..n-1} of size ell.
  for (int i = 0; i < ell; ++i) subset[static_cast<std::size_t>(i)] = i;
  long long total = 0;
  for (;;) {
    int good = 0;
    for (int i = 0; i < ell; ++i) good += subset[static_cast<std::size_t>(i)] >= f;  // zeros sit at positions f..n-1
    ++counts[static_cast<std::size_t>(good)];
    ++total;
    int pos = ell - 1;
    while (pos >= 0 && subset[static_cast<std::size_t>(pos)] == n - ell + pos) --pos;
    if (pos < 0) break;
    ++subset[static_cast<std::size_t>(pos)];
    for (int i = pos + 1; i < ell; ++i)
      subset[static_cast<std::size_t>(i)] = subset[static_cast<std::size_t>(i - 1)] + 1;
  }
  std::vector<double> dist(static_cast<std::size_t>(ell) + 1, 0.0);
  for (int g = 0; g <= ell; ++g)
    dist[static_cast<std::size_t>(g)] =
        static_cast<double>(counts[static_cast<std::size_t>(g)]) / static_cast<double>(total);
  return dist;
}

struct StepSummary {
  std::vector<double> improve;  // index delta = 1..n-f
  double stay = 0.0;
  double cost = 0.0;  // expected evaluations of one iteration
};

// One iteration from fitness f under a fixed capacity.
StepSummary analyze_step(int n, int f, double lambda, int capacity) {
  StepSummary out;
  out.improve.assign(static_cast<std::size_t>(n - f) + 1, 0.0);
  const auto ell_dist = positive_binomial(n, lambda / n);
  const double bias = 1.0 / lambda;
  KahanSum cost;
  cost.add(static_cast<double>(capacity));  // mutation evaluations

  for (int ell = 1; ell <= n; ++ell) {
    const double p_ell = ell_dist[static_cast<std::size_t>(ell)];
    if (p_ell == 0.0) continue;
    const auto winners = max_of(good_flip_dist(n, f, ell), capacity);

    for (int g = 0; g <= ell; ++g) {
      const double p_g = winners[static_cast<std::size_t>(g)];
      if (p_g == 0.0) continue;

      // Single crossover offspring: truncated change and evaluation indicator
      // by enumerating (dg, db).
      const int base = std::max(0, 2 * g - ell);
      std::vector<double> change(static_cast<std::size_t>(ell) + 1, 0.0);
      KahanSum evaluated;
      for (int dg = 0; dg <= g; ++dg) {
        const double p_dg = static_cast<double>(choose(g, dg)) * std::pow(bias, dg) *
                            std::pow(1.0 - bias, g - dg);
        for (int db = 0; db <= ell - g; ++db) {
          const double p_db = static_cast<double>(choose(ell - g, db)) * std::pow(bias, db) *
                              std::pow(1.0 - bias, ell - g - db);
          const double p = p_dg * p_db;
          change[static_cast<std::size_t>(std::max(base, dg - db))] += p;
          const bool equals_parent = dg == 0 && db == 0;
          const bool equals_winner = dg == g && db == ell - g;
          if (!equals_parent && !equals_winner) evaluated.add(p);
        }
      }
      cost.add(p_ell * p_g * capacity * evaluated.sum);

      const auto best_change = max_of(change, capacity);
      for (int delta = 0; delta <= ell; ++delta) {
        const double p = best_change[static_cast<std::size_t>(delta)];
        if (p == 0.0) continue;
        const double w = p_ell * p_g * p;
        if (delta >= 1)
          out.improve[static_cast<std::size_t>(std::min(delta, n - f))] += w;
        else
          out.stay += w;
      }
    }
  }
  out.cost = cost.sum;
  return out;
}

StepSummary mix_steps(const StepSummary& a, const StepSummary& b, double wa) {
  StepSummary out;
  out.improve.resize(a.improve.size());
  for (std::size_t i = 0; i < a.improve.size(); ++i)
    out.improve[i] = wa * a.improve[i] + (1.0 - wa) * b.improve[i];
  out.stay = wa * a.stay + (1.0 - wa) * b.stay;
  out.cost = wa * a.cost + (1.0 - wa) * b.cost;
  return out;
}

}  // namespace

std::vector<double> oracle_runtime_table(int n, const Policy& policy,
                                         const RoundingMode& rounding) {
  if (n < 1 || n > kMaxOracleN)
    throw std::invalid_argument("oracle_runtime_table: n must be in [1, 8]");
  if (policy.n != n) throw std::invalid_argument("oracle_runtime_table: dimension mismatch");
  rounding.validate(n);

  std::vector<double> T(static_cast<std::size_t>(n) + 1, 0.0);
  for (int f = n - 1; f >= 0; --f) {
    const double lambda = policy.lambda_at(f);
    StepSummary step;
    switch (rounding.kind) {
      case RoundingMode::Kind::Nearest:
        step = analyze_step(n, f, lambda, round_nearest(lambda));
        break;
      case RoundingMode::Kind::Decoupled:
        step = analyze_step(n, f, lambda, rounding.capacities[static_cast<std::size_t>(f)]);
        break;
      case RoundingMode::Kind::Stochastic: {
        const double ce = std::ceil(lambda);
        const double w = ce - lambda;
        if (w <= 0.0) {
          step = analyze_step(n, f, lambda, static_cast<int>(ce));
        } else {
          step = mix_steps(analyze_step(n, f, lambda, static_cast<int>(std::floor(lambda))),
                           analyze_step(n, f, lambda, static_cast<int>(ce)), w);
        }
        break;
      }
    }
    // Back-substitution row of (I - Q) T = cost. The off-diagonal mass is
    // summed directly (never 1 - stay) so tiny escape probabilities keep
    // their relative accuracy.
    KahanSum rhs;
    rhs.add(step.cost);
    KahanSum escape;
    for (int delta = 1; delta <= n - f; ++delta) {
      const double p = step.improve[static_cast<std::size_t>(delta)];
      escape.add(p);
      rhs.add(p * T[static_cast<std::size_t>(f + delta)]);
    }
    const double p_move = escape.sum;
    if (p_move <= 0.0)
      throw std::runtime_error("oracle_runtime_table: absorbing defect at fitness " +
                               std::to_string(f));
    T[static_cast<std::size_t>(f)] = rhs.sum / p_move;
  }
  return T;
}

double oracle_runtime_total(int n, const Policy& policy, const RoundingMode& rounding) {
  const auto T = oracle_runtime_table(n, policy, rounding);
  KahanSum total;
  const double denom = std::pow(2.0, n);
  for (int f = 0; f <= n; ++f)
    total.add(static_cast<double>(choose(n, f)) / denom * T[static_cast<std::size_t>(f)]);
  return total.sum;
}

}  // namespace ollga
