#include "ollga/sep_cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ollga/parallel.hpp"
#include "ollga/rng.hpp"

namespace ollga {

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

double normal_draw(Rng& rng) {
  // Box-Muller, two fresh uniforms per draw.
  const double u1 = 1.0 - rng.next_unit();
  const double u2 = rng.next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace

EsResult sep_cmaes_minimize(const std::function<double(std::span<const double>)>& objective,
                            std::span<const double> lower, std::span<const double> upper,
                            const EsConfig& config) {
  const int dim = static_cast<int>(lower.size());
  if (dim < 1 || upper.size() != lower.size())
    throw std::invalid_argument("sep_cmaes_minimize: inconsistent box");
  if (config.population < 4) throw std::invalid_argument("sep_cmaes_minimize: population < 4");
  if (config.iterations < 1) throw std::invalid_argument("sep_cmaes_minimize: iterations < 1");

  const int lam = config.population;
  const int mu = lam / 2;
  std::vector<double> weights(static_cast<std::size_t>(mu));
  for (int i = 0; i < mu; ++i)
    weights[static_cast<std::size_t>(i)] = std::log(mu + 0.5) - std::log(i + 1.0);
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (auto& w : weights) w /= wsum;
  double mueff = 0.0;
  for (double w : weights) mueff += w * w;
  mueff = 1.0 / mueff;

  const double N = dim;
  const double cs = (mueff + 2.0) / (N + mueff + 5.0);
  const double ds = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (N + 1.0)) - 1.0) + cs;
  const double cc = (4.0 + mueff / N) / (N + 4.0 + 2.0 * mueff / N);
  // Diagonal-only adaptation affords the (N + 1.5) / 3 learning-rate boost.
  const double boost = (N + 1.5) / 3.0;
  const double c1 = std::min(1.0, 2.0 / ((N + 1.3) * (N + 1.3) + mueff) * boost);
  const double cmu =
      std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((N + 2.0) * (N + 2.0) + mueff) * boost);
  const double chiN = std::sqrt(N) * (1.0 - 1.0 / (4.0 * N) + 1.0 / (21.0 * N * N));

  Rng rng(config.seed);

  // Internal coordinates are normalized to [0, 1]^dim.
  std::vector<double> mean(static_cast<std::size_t>(dim));
  for (auto& m : mean) m = rng.next_unit();
  double sigma = config.sigma0;
  std::vector<double> diag(static_cast<std::size_t>(dim), 1.0);  // C diagonal
  std::vector<double> d_scale(static_cast<std::size_t>(dim), 1.0);
  std::vector<double> ps(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> pc(static_cast<std::size_t>(dim), 0.0);

  auto to_box = [&](const std::vector<double>& u, std::vector<double>& x) {
    for (int j = 0; j < dim; ++j)
      x[static_cast<std::size_t>(j)] =
          lower[static_cast<std::size_t>(j)] +
          u[static_cast<std::size_t>(j)] *
              (upper[static_cast<std::size_t>(j)] - lower[static_cast<std::size_t>(j)]);
  };

  EsResult result;
  result.best_value = std::numeric_limits<double>::infinity();
  result.best_x.assign(static_cast<std::size_t>(dim), 0.0);

  std::vector<std::vector<double>> cand(static_cast<std::size_t>(lam),
                                        std::vector<double>(static_cast<std::size_t>(dim)));
  std::vector<double> values(static_cast<std::size_t>(lam));
  std::vector<double> x_scratch(static_cast<std::size_t>(dim));

  for (int gen = 0; gen < config.iterations; ++gen) {
    // Sample candidates; out-of-box samples are redrawn up to 10 times, then
    // reflected coordinate-wise.
    for (int k = 0; k < lam; ++k) {
      auto& u = cand[static_cast<std::size_t>(k)];
      bool inside = false;
      for (int attempt = 0; attempt < 10 && !inside; ++attempt) {
        inside = true;
        for (int j = 0; j < dim; ++j) {
          const double v = mean[static_cast<std::size_t>(j)] +
                           sigma * d_scale[static_cast<std::size_t>(j)] * normal_draw(rng);
          u[static_cast<std::size_t>(j)] = v;
          if (v < 0.0 || v > 1.0) inside = false;
        }
      }
      if (!inside) {
        for (int j = 0; j < dim; ++j) {
          double v = u[static_cast<std::size_t>(j)];
          while (v < 0.0 || v > 1.0) v = v < 0.0 ? -v : 2.0 - v;
          u[static_cast<std::size_t>(j)] = v;
        }
      }
    }

    ThreadPool::global().parallel_for(0, static_cast<std::size_t>(lam), [&](std::size_t k) {
      std::vector<double> x(static_cast<std::size_t>(dim));
      to_box(cand[k], x);
      values[k] = objective(x);
    });

    std::vector<int> order(static_cast<std::size_t>(lam));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double va = values[static_cast<std::size_t>(a)];
      const double vb = values[static_cast<std::size_t>(b)];
      return va < vb || (va == vb && a < b);
    });

    const int best_k = order[0];
    if (values[static_cast<std::size_t>(best_k)] < result.best_value) {
      result.best_value = values[static_cast<std::size_t>(best_k)];
      to_box(cand[static_cast<std::size_t>(best_k)], x_scratch);
      result.best_x = x_scratch;
    }
    result.best_history.push_back(result.best_value);

    // Weighted recombination.
    std::vector<double> new_mean(static_cast<std::size_t>(dim), 0.0);
    for (int i = 0; i < mu; ++i) {
      const auto& u = cand[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
      const double w = weights[static_cast<std::size_t>(i)];
      for (int j = 0; j < dim; ++j) new_mean[static_cast<std::size_t>(j)] += w * u[static_cast<std::size_t>(j)];
    }

    // Paths from the actual mean displacement (repairs included).
    double ps_norm2 = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double y = (new_mean[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)]) / sigma;
      const double z = y / d_scale[static_cast<std::size_t>(j)];
      ps[static_cast<std::size_t>(j)] = (1.0 - cs) * ps[static_cast<std::size_t>(j)] +
                                        std::sqrt(cs * (2.0 - cs) * mueff) * z;
      ps_norm2 += ps[static_cast<std::size_t>(j)] * ps[static_cast<std::size_t>(j)];
    }
    const double expected = chiN;
    const double hsig_lhs =
        std::sqrt(ps_norm2) / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * (gen + 1))) / expected;
    const double hsig = hsig_lhs < 1.4 + 2.0 / (N + 1.0) ? 1.0 : 0.0;
    for (int j = 0; j < dim; ++j) {
      const double y = (new_mean[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)]) / sigma;
      pc[static_cast<std::size_t>(j)] =
          (1.0 - cc) * pc[static_cast<std::size_t>(j)] + hsig * std::sqrt(cc * (2.0 - cc) * mueff) * y;
    }

    // Diagonal covariance update: rank-one plus rank-mu.
    for (int j = 0; j < dim; ++j) {
      double rank_mu = 0.0;
      for (int i = 0; i < mu; ++i) {
        const auto& u = cand[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        const double y = (u[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)]) / sigma;
        rank_mu += weights[static_cast<std::size_t>(i)] * y * y;
      }
      double& cjj = diag[static_cast<std::size_t>(j)];
      cjj = (1.0 - c1 - cmu) * cjj +
            c1 * (pc[static_cast<std::size_t>(j)] * pc[static_cast<std::size_t>(j)] +
                  (1.0 - hsig) * cc * (2.0 - cc) * cjj) +
            cmu * rank_mu;
      cjj = std::max(cjj, 1e-40);
      d_scale[static_cast<std::size_t>(j)] = std::sqrt(cjj);
    }

    sigma *= std::exp(cs / ds * (std::sqrt(ps_norm2) / expected - 1.0));
    sigma = std::min(sigma, 1e6);
    mean = new_mean;
    result.generations = gen + 1;

    bool collapsed = true;
    for (int j = 0; j < dim; ++j)
      if (sigma * d_scale[static_cast<std::size_t>(j)] >= config.degeneration) {
        collapsed = false;
        break;
      }
    if (collapsed) {
      result.degenerate = true;
      break;
    }
  }
  return result;
}

}  // namespace ollga
