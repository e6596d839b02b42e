#pragma once

// Scalar exp core shared by the reference kernels and the tail handling of
// the SIMD variants. All fused operations are spelled out with std::fma so
// that vector fmadd and the scalar path round identically; the including
// translation units are compiled with -ffp-contract=off.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace ollga::kernels::detail {

inline constexpr double kLog2E = 1.4426950408889634073599;
inline constexpr double kLn2Hi = 6.93145751953125e-1;
inline constexpr double kLn2Lo = 1.42860682030941723212e-6;

inline constexpr double kExpP0 = 1.26177193074810590878e-4;
inline constexpr double kExpP1 = 3.02994407707441961300e-2;
inline constexpr double kExpP2 = 9.99999999999999999910e-1;
inline constexpr double kExpQ0 = 3.00198505138664455042e-6;
inline constexpr double kExpQ1 = 2.52448340349684104192e-3;
inline constexpr double kExpQ2 = 2.27265548208155028766e-1;
inline constexpr double kExpQ3 = 2.00000000000000000005e0;

inline constexpr double kExpOverflow = 709.782712893383996732;
inline constexpr double kExpUnderflow = -745.133219101941108420;

inline double pow2i(long long e) {
  // e stays within [-538, 514] after the two-way split below.
  return std::bit_cast<double>(static_cast<std::uint64_t>(e + 1023) << 52);
}

inline double exp_scalar(double x) {
  if (std::isnan(x)) return x;
  if (x > kExpOverflow) return std::numeric_limits<double>::infinity();
  if (x < kExpUnderflow) return 0.0;
  const double k = std::nearbyint(x * kLog2E);
  double r = std::fma(-k, kLn2Hi, x);
  r = std::fma(-k, kLn2Lo, r);
  const double z = r * r;
  double p = std::fma(kExpP0, z, kExpP1);
  p = std::fma(p, z, kExpP2);
  p *= r;
  double q = std::fma(kExpQ0, z, kExpQ1);
  q = std::fma(q, z, kExpQ2);
  q = std::fma(q, z, kExpQ3);
  const double e = 1.0 + 2.0 * p / (q - p);
  // Scale by 2^k in two steps so subnormal results stay representable.
  const long long hi = static_cast<long long>(std::floor(k * 0.5));
  const long long lo = static_cast<long long>(k) - hi;
  return e * pow2i(hi) * pow2i(lo);
}

}  // namespace ollga::kernels::detail
