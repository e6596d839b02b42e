#include "ollga/kernels/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace ollga::kernels {

#ifndef OLLGA_HAVE_AVX2_TU
namespace avx2 {
bool compiled() { return false; }
bool supported() { return false; }
void exp_batch(const double* x, double* out, std::size_t count) { scalar::exp_batch(x, out, count); }
double dot(const double* a, const double* b, std::size_t count) { return scalar::dot(a, b, count); }
double sum(const double* x, std::size_t count) { return scalar::sum(x, count); }
}  // namespace avx2
#endif

namespace {

Backend pick_default() {
  if (const char* env = std::getenv("OLLGA_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
    if (std::strcmp(env, "avx2") == 0 && avx2::compiled() && avx2::supported())
      return Backend::Avx2;
    if (std::strcmp(env, "avx2") == 0) return Backend::Scalar;
  }
  return (avx2::compiled() && avx2::supported()) ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> slot{pick_default()};
  return slot;
}

}  // namespace

Backend detect_backend() { return pick_default(); }

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (b == Backend::Avx2 && !(avx2::compiled() && avx2::supported())) b = Backend::Scalar;
  backend_slot().store(b, std::memory_order_relaxed);
}

const char* backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

void exp_batch(const double* x, double* out, std::size_t count) {
  if (active_backend() == Backend::Avx2)
    avx2::exp_batch(x, out, count);
  else
    scalar::exp_batch(x, out, count);
}

double dot(const double* a, const double* b, std::size_t count) {
  return active_backend() == Backend::Avx2 ? avx2::dot(a, b, count) : scalar::dot(a, b, count);
}

double sum(const double* x, std::size_t count) {
  return active_backend() == Backend::Avx2 ? avx2::sum(x, count) : scalar::sum(x, count);
}

}  // namespace ollga::kernels
