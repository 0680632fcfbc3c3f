#pragma once
// Double-precision math kernels used by the tensor/tape layer.
//
// Each kernel has a scalar reference implementation plus SIMD variants
// (AVX2 on x86-64, NEON on aarch64) selected at runtime. The variants are
// equivalence-tested against the scalar reference; see tests/test_kernels.cpp.

#include <cstddef>
#include <string>

namespace lrlm::kernels {

struct Kernels {
  // y = sum_i a[i] * b[i]
  double (*dot)(std::size_t n, const double* a, const double* b);
  // y[i] += alpha * x[i]
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  // out[i] = a[i] + b[i]
  void (*add)(std::size_t n, const double* a, const double* b, double* out);
  // out[i] = a[i] * b[i]
  void (*mul)(std::size_t n, const double* a, const double* b, double* out);
  // x[i] *= alpha
  void (*scale)(std::size_t n, double alpha, double* x);
  // max over x[0..n), n >= 1
  double (*max)(std::size_t n, const double* x);
  // sum over x[0..n)
  double (*sum)(std::size_t n, const double* x);
  // y[i] = dot(W row i, x); W is m x n row-major
  void (*matvec)(std::size_t m, std::size_t n, const double* w, const double* x,
                 double* y);
  // out[j] += sum_i W[i][j] * g[i]  (transposed matvec, accumulating)
  void (*matvec_t_acc)(std::size_t m, std::size_t n, const double* w,
                       const double* g, double* out);
  // W[i][j] += g[i] * x[j]  (rank-1 accumulate into m x n row-major W)
  void (*outer_acc)(std::size_t m, std::size_t n, const double* g,
                    const double* x, double* w);
};

enum class Backend { kScalar, kAvx2, kNeon };

// Backends compiled into this binary (scalar always present).
bool available(Backend b);

// Active kernel table. Defaults to the best available backend; the
// LRLM_KERNELS env var ("scalar" / "avx2" / "neon") overrides at startup.
const Kernels& active();

// Force a specific backend (must be available). Used by equivalence tests.
void select(Backend b);

Backend active_backend();
std::string backend_name(Backend b);

const Kernels& scalar_table();
#if defined(__x86_64__)
const Kernels& avx2_table();
#endif
#if defined(__aarch64__)
const Kernels& neon_table();
#endif

}  // namespace lrlm::kernels
