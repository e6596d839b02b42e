#include "ollga/binned_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ollga/rng.hpp"

namespace ollga {

namespace {

constexpr double kBad = 1e300;  // objective for undecodable / stalled policies

RoundingMode objective_rounding(BinnedObjective objective) {
  return objective == BinnedObjective::Nearest ? RoundingMode::nearest()
                                               : RoundingMode::stochastic();
}

std::vector<int> decode_capacities(std::span<const double> dims, int n) {
  std::vector<int> caps(dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i)
    caps[i] = std::clamp(round_nearest(dims[i] * n), 1, n);
  return caps;
}

struct RestartOutcome {
  double total = kBad;
  std::vector<double> x;
  std::vector<double> history;
};

BinnedOptResult run_restarts(int dim,
                             const std::function<double(std::span<const double>)>& objective,
                             const std::function<double(std::span<const double>, BinnedOptResult&)>&
                                 score_exact,
                             const BinnedOptConfig& config) {
  if (config.restarts < 1) throw std::invalid_argument("optimize_binned: restarts < 1");
  std::vector<double> lo(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> hi(static_cast<std::size_t>(dim), 1.0);

  BinnedOptResult out;
  std::vector<RestartOutcome> finals;
  for (int r = 0; r < config.restarts; ++r) {
    EsConfig es = config.es;
    es.seed = derive_seed(config.master_seed, 0xe5, static_cast<std::uint64_t>(r));
    const EsResult res = sep_cmaes_minimize(objective, lo, hi, es);
    out.convergence.push_back(res.best_history);
    finals.push_back({res.best_value, res.best_x, {}});
  }
  out.restarts_run = config.restarts;
  // Re-score every restart winner exactly and keep the best.
  double best_exact = kBad;
  std::vector<double> best_x;
  for (const auto& fin : finals) {
    BinnedOptResult scratch;
    const double exact = score_exact(fin.x, scratch);
    if (exact < best_exact) {
      best_exact = exact;
      best_x = fin.x;
    }
  }
  out.total = score_exact(best_x, out);
  return out;
}

}  // namespace

double decode_lambda(double coarse, double fine, int n) {
  const double raw = round_nearest(coarse * n) + fine - 0.5;
  return std::max(1.0, std::min(static_cast<double>(n), raw));
}

BinnedPolicy decode_reparam(std::span<const double> vec, const BinScheme& scheme) {
  if (vec.size() != static_cast<std::size_t>(2 * scheme.k))
    throw std::invalid_argument("decode_reparam: expected two entries per bin");
  std::vector<double> lambdas(static_cast<std::size_t>(scheme.k));
  for (int i = 0; i < scheme.k; ++i)
    lambdas[static_cast<std::size_t>(i)] =
        decode_lambda(vec[static_cast<std::size_t>(2 * i)],
                      vec[static_cast<std::size_t>(2 * i + 1)], scheme.n);
  return BinnedPolicy(scheme, std::move(lambdas));
}

BinnedOptResult optimize_binned(const DpEvaluator& dp, const BinScheme& scheme,
                                BinnedObjective objective, const BinnedOptConfig& config) {
  const RoundingMode rounding = objective_rounding(objective);
  const DpEvaluator coarse(scheme.n, DpConfig{config.objective_log_cutoff, 64u << 20});
  auto eval = [&](std::span<const double> vec) -> double {
    const BinnedPolicy bp = decode_reparam(vec, scheme);
    try {
      return coarse.policy_runtime(bp.expand(), rounding).total;
    } catch (const std::runtime_error&) {
      return kBad;
    }
  };
  auto score = [&](std::span<const double> x, BinnedOptResult& out) -> double {
    out.policy = decode_reparam(x, scheme);
    return dp.policy_runtime(out.policy.expand(), rounding).total;
  };
  return run_restarts(2 * scheme.k, eval, score, config);
}

BinnedOptResult optimize_binned_decoupled(const DpEvaluator& dp, const BinScheme& scheme,
                                          const BinnedOptConfig& config) {
  const int k = scheme.k;
  const DpEvaluator coarse(scheme.n, DpConfig{config.objective_log_cutoff, 64u << 20});
  auto split = [&, k](std::span<const double> vec) {
    return std::pair{vec.subspan(0, static_cast<std::size_t>(2 * k)),
                     vec.subspan(static_cast<std::size_t>(2 * k))};
  };
  auto capacity_table = [&](std::span<const double> cap_dims) {
    const std::vector<int> bin_caps = decode_capacities(cap_dims, scheme.n);
    std::vector<int> table(static_cast<std::size_t>(scheme.n));
    for (int i = 0; i < k; ++i) {
      const int end = std::min(scheme.bin_end(i), scheme.n - 1);
      for (int f = scheme.bin_begin(i); f <= end; ++f)
        table[static_cast<std::size_t>(f)] = bin_caps[static_cast<std::size_t>(i)];
    }
    return table;
  };
  auto eval = [&](std::span<const double> vec) -> double {
    const auto [lam_dims, cap_dims] = split(vec);
    const BinnedPolicy bp = decode_reparam(lam_dims, scheme);
    try {
      return coarse.policy_runtime_explicit(bp.expand(), capacity_table(cap_dims)).total;
    } catch (const std::runtime_error&) {
      return kBad;
    }
  };
  auto score = [&](std::span<const double> x, BinnedOptResult& out) -> double {
    const auto [lam_dims, cap_dims] = split(x);
    out.policy = decode_reparam(lam_dims, scheme);
    out.capacities = decode_capacities(cap_dims, scheme.n);
    return dp.policy_runtime_explicit(out.policy.expand(), capacity_table(cap_dims)).total;
  };
  return run_restarts(3 * k, eval, score, config);
}

BinnedOptResult naive_direct_optimize(const DpEvaluator& dp, const BinScheme& scheme,
                                      BinnedObjective objective, const BinnedOptConfig& config) {
  const RoundingMode rounding = objective_rounding(objective);
  const int n = scheme.n;
  const DpEvaluator coarse(scheme.n, DpConfig{config.objective_log_cutoff, 64u << 20});
  auto decode = [&](std::span<const double> vec) {
    std::vector<double> lambdas(vec.size());
    for (std::size_t i = 0; i < vec.size(); ++i)
      lambdas[i] = std::clamp(1.0 + vec[i] * (n - 1), 1.0, static_cast<double>(n));
    return BinnedPolicy(scheme, std::move(lambdas));
  };
  auto eval = [&](std::span<const double> vec) -> double {
    try {
      return coarse.policy_runtime(decode(vec).expand(), rounding).total;
    } catch (const std::runtime_error&) {
      return kBad;
    }
  };
  auto score = [&](std::span<const double> x, BinnedOptResult& out) -> double {
    out.policy = decode(x);
    return dp.policy_runtime(out.policy.expand(), rounding).total;
  };
  return run_restarts(scheme.k, eval, score, config);
}

}  // namespace ollga
