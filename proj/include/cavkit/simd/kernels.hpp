#pragma once

// Dense double-precision inner loops behind every module. Each instruction
// set provides the same table of entry points; the active table is picked
// once at startup from CPUID (or CAVKIT_SIMD=scalar|avx2|neon) and the
// scalar table is the reference that the vector variants are tested against.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace cavkit::simd {

struct KernelTable {
  std::string_view name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[r] = sum_c A[r * cols + c] * x[c], A row-major
  void (*gemv)(const double* A, std::size_t rows, std::size_t cols, const double* x,
               double* y);
  // y[c] += sum_r x[r] * A[r * cols + c]
  void (*gemv_t_acc)(const double* A, std::size_t rows, std::size_t cols, const double* x,
                     double* y);
};

const KernelTable& scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_kernels();
#endif
#if defined(__aarch64__)
const KernelTable& neon_kernels();
#endif

// Tables that can run on this CPU, scalar first.
std::vector<const KernelTable*> available_kernels();

const KernelTable& active();

// Convenience wrappers over the active table.
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace cavkit::simd
