#pragma once

#include <cstdint>

namespace ollga {

// xoshiro256++ seeded through SplitMix64. We never use std:: distributions:
// every draw below is fully specified, so streams are reproducible across
// compilers and platforms.
class Rng {
 public:
  struct State {
    std::uint64_t s[4];
  };

  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1), 53 bits.
  double next_unit();
  // Uniform in [0, bound); Lemire multiply-shift with rejection.
  std::uint64_t next_below(std::uint64_t bound);
  bool next_bernoulli(double p) { return next_unit() < p; }

  State snapshot() const { return state_; }
  void restore(const State& s) { state_ = s; }

 private:
  State state_;
};

// Independent stream for (master, salt, index); used to hand every simulator
// run / optimizer restart its own deterministic seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt, std::uint64_t index);

}  // namespace ollga
