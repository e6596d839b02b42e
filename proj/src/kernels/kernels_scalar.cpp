#include <cmath>

#include "ollga/kernels/exp_core.hpp"
#include "ollga/kernels/kernels.hpp"

namespace ollga::kernels::scalar {

void exp_batch(const double* x, double* out, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) out[i] = detail::exp_scalar(x[i]);
}

double dot(const double* a, const double* b, std::size_t count) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    acc[0] = std::fma(a[i + 0], b[i + 0], acc[0]);
    acc[1] = std::fma(a[i + 1], b[i + 1], acc[1]);
    acc[2] = std::fma(a[i + 2], b[i + 2], acc[2]);
    acc[3] = std::fma(a[i + 3], b[i + 3], acc[3]);
  }
  for (std::size_t r = 0; i < count; ++i, ++r) acc[r] = std::fma(a[i], b[i], acc[r]);
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double sum(const double* x, std::size_t count) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    acc[0] += x[i + 0];
    acc[1] += x[i + 1];
    acc[2] += x[i + 2];
    acc[3] += x[i + 3];
  }
  for (std::size_t r = 0; i < count; ++i, ++r) acc[r] += x[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

}  // namespace ollga::kernels::scalar
