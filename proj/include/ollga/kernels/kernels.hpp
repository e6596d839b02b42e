#pragma once

#include <cstddef>

namespace ollga::kernels {

enum class Backend { Scalar, Avx2 };

// Best backend the current CPU supports. The OLLGA_KERNELS environment
// variable ("scalar" / "avx2") overrides the automatic choice.
Backend detect_backend();
Backend active_backend();
// Falls back to Scalar if the requested backend is unavailable.
void set_backend(Backend b);
const char* backend_name(Backend b);

// out[i] = exp(x[i]). Own exp implementation (Cody-Waite reduction plus a
// rational minimax kernel, roughly 2 ulp); every backend produces
// bit-identical output for the same input.
void exp_batch(const double* x, double* out, std::size_t count);

// Blocked dot product / sum with four independent accumulators. The scalar
// reference uses the same blocking and reduction order as the SIMD variants,
// so results are bit-identical across backends.
double dot(const double* a, const double* b, std::size_t count);
double sum(const double* x, std::size_t count);

// Direct entry points, used by the backend equivalence tests.
namespace scalar {
void exp_batch(const double* x, double* out, std::size_t count);
double dot(const double* a, const double* b, std::size_t count);
double sum(const double* x, std::size_t count);
}  // namespace scalar

namespace avx2 {
bool compiled();
bool supported();
void exp_batch(const double* x, double* out, std::size_t count);
double dot(const double* a, const double* b, std::size_t count);
double sum(const double* x, std::size_t count);
}  // namespace avx2

}  // namespace ollga::kernels
