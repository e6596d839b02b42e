#include "ollga/policy.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace ollga {

int round_nearest(double lambda) {
  const double fl = std::floor(lambda);
  return lambda - fl < 0.5 ? static_cast<int>(fl) : static_cast<int>(fl) + 1;
}

Policy::Policy(int n_, std::vector<double> lambdas_) : n(n_), lambdas(std::move(lambdas_)) {
  validate();
}

Policy Policy::constant(int n, double lambda) {
  return Policy(n, std::vector<double>(static_cast<std::size_t>(n), lambda));
}

void Policy::validate() const {
  if (n < 1) throw std::invalid_argument("Policy: n must be >= 1");
  if (lambdas.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("Policy: table must have exactly n entries");
  for (double v : lambdas)
    if (!(v >= 1.0 && v <= static_cast<double>(n)))
      throw std::invalid_argument("Policy: every lambda must lie in [1, n]");
}

int BinScheme::max_bins(int n) {
  if (n < 1) throw std::invalid_argument("BinScheme: n must be >= 1");
  int k = 0;
  while ((1LL << k) < n) ++k;  // ceil(log2 n)
  return k < 1 ? 1 : k;
}

BinScheme BinScheme::geometric(int n, int k) {
  if (n < 1) throw std::invalid_argument("BinScheme: n must be >= 1");
  if (k < 1 || k > max_bins(n))
    throw std::invalid_argument("BinScheme: k must lie in [1, ceil(log2 n)]");
  std::vector<int> bounds(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    bounds[static_cast<std::size_t>(i)] = n - static_cast<int>(n / (1LL << i));
  return from_boundaries(n, std::move(bounds));
}

BinScheme BinScheme::from_boundaries(int n, std::vector<int> boundaries) {
  if (n < 1) throw std::invalid_argument("BinScheme: n must be >= 1");
  if (boundaries.empty()) throw std::invalid_argument("BinScheme: no boundaries");
  if (boundaries.front() != 0) throw std::invalid_argument("BinScheme: first boundary must be 0");
  for (std::size_t i = 1; i < boundaries.size(); ++i)
    if (boundaries[i] <= boundaries[i - 1] || boundaries[i] > n)
      throw std::invalid_argument("BinScheme: boundaries must increase and stay within [0, n]");
  BinScheme s;
  s.n = n;
  s.k = static_cast<int>(boundaries.size());
  s.boundaries = std::move(boundaries);
  return s;
}

int BinScheme::bin_of(int fitness) const {
  if (fitness < 0 || fitness > n) throw std::out_of_range("BinScheme: fitness out of range");
  int i = k - 1;
  while (i > 0 && boundaries[static_cast<std::size_t>(i)] > fitness) --i;
  return i;
}

BinnedPolicy::BinnedPolicy(BinScheme scheme_, std::vector<double> lambdas_)
    : scheme(std::move(scheme_)), lambdas(std::move(lambdas_)) {
  if (lambdas.size() != static_cast<std::size_t>(scheme.k))
    throw std::invalid_argument("BinnedPolicy: one lambda per bin required");
  for (double v : lambdas)
    if (!(v >= 1.0 && v <= static_cast<double>(scheme.n)))
      throw std::invalid_argument("BinnedPolicy: every lambda must lie in [1, n]");
}

Policy BinnedPolicy::expand() const {
  std::vector<double> table(static_cast<std::size_t>(scheme.n));
  for (int i = 0; i < scheme.k; ++i) {
    const int end = std::min(scheme.bin_end(i), scheme.n - 1);
    for (int f = scheme.bin_begin(i); f <= end; ++f)
      table[static_cast<std::size_t>(f)] = lambdas[static_cast<std::size_t>(i)];
  }
  return Policy(scheme.n, std::move(table));
}

RoundingMode RoundingMode::decoupled(std::vector<int> capacities) {
  RoundingMode m;
  m.kind = Kind::Decoupled;
  m.capacities = std::move(capacities);
  return m;
}

void RoundingMode::validate(int n) const {
  if (kind != Kind::Decoupled) return;
  if (capacities.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("RoundingMode: decoupled table must have n entries");
  for (int c : capacities)
    if (c < 1 || c > n)
      throw std::invalid_argument("RoundingMode: population sizes must lie in [1, n]");
}

double theory_lambda(int n, int fitness) {
  return std::sqrt(static_cast<double>(n) / static_cast<double>(n - fitness));
}

Policy theory_policy(int n) {
  if (n < 1) throw std::invalid_argument("theory_policy: n must be >= 1");
  std::vector<double> table(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) table[static_cast<std::size_t>(f)] = theory_lambda(n, f);
  return Policy(n, std::move(table));
}

BinnedPolicy binned_theory_policy(int n, int k, Anchor anchor) {
  BinScheme scheme = BinScheme::geometric(n, k);
  std::vector<double> values(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const int begin = scheme.bin_begin(i);
    const int end = scheme.bin_end(i);
    int at = begin;
    switch (anchor) {
      case Anchor::Start: at = begin; break;
      case Anchor::Middle: at = (begin + end) / 2; break;  // even-sized bins: smaller point
      case Anchor::End: at = end; break;
    }
    if (at > n - 1) at = n - 1;  // fitness n never reads a parameter
    values[static_cast<std::size_t>(i)] = theory_lambda(n, at);
  }
  return BinnedPolicy(std::move(scheme), std::move(values));
}

const char* anchor_name(Anchor a) {
  switch (a) {
    case Anchor::Start: return "start";
    case Anchor::Middle: return "middle";
    case Anchor::End: return "end";
  }
  return "?";
}

std::optional<Anchor> anchor_from_name(const std::string& name) {
  if (name == "start" || name == "S") return Anchor::Start;
  if (name == "middle" || name == "M") return Anchor::Middle;
  if (name == "end" || name == "E") return Anchor::End;
  return std::nullopt;
}

}  // namespace ollga
