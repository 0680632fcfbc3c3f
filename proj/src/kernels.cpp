#include "lrlm/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace lrlm::kernels {

namespace {

double dot_scalar(std::size_t n, const double* a, const double* b) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add_scalar(std::size_t n, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void mul_scalar(std::size_t n, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_scalar(std::size_t n, double alpha, double* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double max_scalar(std::size_t n, const double* x) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

double sum_scalar(std::size_t n, const double* x) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

void matvec_scalar(std::size_t m, std::size_t n, const double* w,
                   const double* x, double* y) {
  for (std::size_t i = 0; i < m; ++i) y[i] = dot_scalar(n, w + i * n, x);
}

void matvec_t_acc_scalar(std::size_t m, std::size_t n, const double* w,
                         const double* g, double* out) {
  for (std::size_t i = 0; i < m; ++i) axpy_scalar(n, g[i], w + i * n, out);
}

void outer_acc_scalar(std::size_t m, std::size_t n, const double* g,
                      const double* x, double* w) {
  for (std::size_t i = 0; i < m; ++i) axpy_scalar(n, g[i], x, w + i * n);
}

const Kernels kScalarTable = {
    dot_scalar,    axpy_scalar,      add_scalar,      mul_scalar, scale_scalar,
    max_scalar,    sum_scalar,       matvec_scalar,   matvec_t_acc_scalar,
    outer_acc_scalar,
};

Backend detect_best() {
#if defined(__x86_64__)
  if (__builtin_cpu_supports("avx2")) return Backend::kAvx2;
#endif
#if defined(__aarch64__)
  return Backend::kNeon;
#endif
  return Backend::kScalar;
}

Backend env_override(Backend fallback) {
  const char* env = std::getenv("LRLM_KERNELS");
  if (!env) return fallback;
  std::string s(env);
  if (s == "scalar") return Backend::kScalar;
  if (s == "avx2" && available(Backend::kAvx2)) return Backend::kAvx2;
  if (s == "neon" && available(Backend::kNeon)) return Backend::kNeon;
  return fallback;
}

Backend g_backend = env_override(detect_best());

}  // namespace

const Kernels& scalar_table() { return kScalarTable; }

bool available(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
#if defined(__x86_64__)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::kNeon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

void select(Backend b) {
  if (!available(b))
    throw std::runtime_error("kernel backend not available: " +
                             backend_name(b));
  g_backend = b;
}

Backend active_backend() { return g_backend; }

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
    case Backend::kNeon: return "neon";
  }
  return "?";
}

const Kernels& active() {
  switch (g_backend) {
#if defined(__x86_64__)
    case Backend::kAvx2: return avx2_table();
#endif
#if defined(__aarch64__)
    case Backend::kNeon: return neon_table();
#endif
    default: return kScalarTable;
  }
}

}  // namespace lrlm::kernels
