// NEON variants of the math kernels (aarch64 only).
#include "lrlm/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace lrlm::kernels {

namespace {

double dot_neon(std::size_t n, const double* a, const double* b) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(std::size_t n, double alpha, const double* x, double* y) {
  float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_neon(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void mul_neon(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_neon(std::size_t n, double alpha, double* x) {
  float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

double max_neon(std::size_t n, const double* x) {
  std::size_t i = 0;
  double m = x[0];
  if (n >= 2) {
    float64x2_t vm = vld1q_f64(x);
    for (i = 2; i + 2 <= n; i += 2) vm = vmaxq_f64(vm, vld1q_f64(x + i));
    m = vmaxvq_f64(vm);
  }
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

double sum_neon(std::size_t n, const double* x) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

void matvec_neon(std::size_t m, std::size_t n, const double* w, const double* x,
                 double* y) {
  for (std::size_t i = 0; i < m; ++i) y[i] = dot_neon(n, w + i * n, x);
}

void matvec_t_acc_neon(std::size_t m, std::size_t n, const double* w,
                       const double* g, double* out) {
  for (std::size_t i = 0; i < m; ++i) axpy_neon(n, g[i], w + i * n, out);
}

void outer_acc_neon(std::size_t m, std::size_t n, const double* g,
                    const double* x, double* w) {
  for (std::size_t i = 0; i < m; ++i) axpy_neon(n, g[i], x, w + i * n);
}

const Kernels kNeonTable = {
    dot_neon,  axpy_neon, add_neon,    mul_neon,          scale_neon,
    max_neon,  sum_neon,  matvec_neon, matvec_t_acc_neon, outer_acc_neon,
};

}  // namespace

const Kernels& neon_table() { return kNeonTable; }

}  // namespace lrlm::kernels

#endif  // __aarch64__
