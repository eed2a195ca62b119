#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

// Data-parallel inner loops. Every kernel has a scalar reference
// implementation; AVX2+FMA (x86-64) and NEON (aarch64) variants live in
// separately compiled translation units and are selected at runtime.
//
// The scalar and vector variants of a kernel agree up to floating-point
// reassociation, not bit-for-bit. Within one variant every kernel uses a
// fixed accumulation order, so results are reproducible run to run.

namespace csc::simd {

enum class Isa { scalar, avx2, neon };

struct Kernels {
  Isa isa;
  const char* name;

  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn)(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
                  std::size_t n);
  // C[k x n] += A[m x k]^T * B[m x n]
  void (*gemm_tn)(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
                  std::size_t n);
  // C[m x k] += A[m x n] * B[k x n]^T
  void (*gemm_nt)(const float* a, const float* b, float* c, std::size_t m, std::size_t n,
                  std::size_t k);

  // out[j] = |x_j - q|^2 for every row x_j of the n x d matrix x.
  void (*sq_dists)(const float* x, std::size_t n, std::size_t d, const float* q, float* out);

  // out[j] = exp(-beta * dist[j]); *sum = sum_j out[j], *weighted = sum_j dist[j] * out[j].
  // Arguments below about -87 underflow to exactly 0.
  void (*gaussian_row)(const float* dist, std::size_t n, float beta, float* out, double* sum,
                       double* weighted);

  // Exact t-SNE forces over all pairs, with w_ij = 1 / (1 + |y_i - y_j|^2):
  //   attr_i = sum_j p_ij w_ij (y_i - y_j),  rep_i = sum_j w_ij^2 (y_i - y_j).
  // p is a symmetric n x n row-major matrix. Returns sum_{i != j} w_ij.
  double (*tsne_forces)(const float* yx, const float* yy, const float* p, std::size_t n,
                        float* attr_x, float* attr_y, float* rep_x, float* rep_y);

  // Writes indices j (ascending) with (xs[j]-qx)^2 + (ys[j]-qy)^2 <= eps2; returns count.
  std::size_t (*radius_2d)(const float* xs, const float* ys, std::size_t n, float qx, float qy,
                           float eps2, std::uint32_t* out_idx);
};

// Kernel table chosen for this process: the best ISA the CPU supports,
// unless the CSC_SIMD environment variable names one ("scalar", "avx2",
// "neon").
const Kernels& active();

// Table for a particular ISA, or nullptr when it is not compiled in or the
// CPU lacks it.
const Kernels* kernels_for(Isa isa);

std::string_view isa_name(Isa isa);

namespace scalar {
extern const Kernels table;
}
#if defined(CSC_HAVE_AVX2_KERNELS)
namespace avx2 {
extern const Kernels table;
}
#endif
#if defined(CSC_HAVE_NEON_KERNELS)
namespace neon {
extern const Kernels table;
}
#endif

}  // namespace csc::simd
