// Built with -mavx2 -mfma. Never called unless the CPU reports both.

#include <immintrin.h>

#include <cmath>

#include "csc/simd.hpp"

namespace csc::simd::avx2 {
namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehdup_ps(lo);
  __m128 s = _mm_add_ps(lo, sh);
  sh = _mm_movehl_ps(sh, s);
  s = _mm_add_ss(s, sh);
  return _mm_cvtss_f32(s);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d hi64 = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, hi64));
}

// Cephes-style expf: range reduction to [-ln2/2, ln2/2], degree-5
// polynomial, scale by 2^n through the exponent bits.
inline __m256 exp_ps(__m256 x) {
  const __m256 hi = _mm256_set1_ps(88.3762626647949f);
  const __m256 lo = _mm256_set1_ps(-88.3762626647949f);
  x = _mm256_min_ps(_mm256_max_ps(x, lo), hi);

  __m256 fx = _mm256_fmadd_ps(x, _mm256_set1_ps(1.44269504088896341f), _mm256_set1_ps(0.5f));
  fx = _mm256_floor_ps(fx);
  x = _mm256_fnmadd_ps(fx, _mm256_set1_ps(0.693359375f), x);
  x = _mm256_fnmadd_ps(fx, _mm256_set1_ps(-2.12194440e-4f), x);

  const __m256 z = _mm256_mul_ps(x, x);
  __m256 y = _mm256_set1_ps(1.9875691500e-4f);
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.3981999507e-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(8.3334519073e-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(4.1665795894e-2f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.6666665459e-1f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(5.0000001201e-1f));
  y = _mm256_fmadd_ps(y, z, x);
  y = _mm256_add_ps(y, _mm256_set1_ps(1.0f));

  __m256i n = _mm256_cvttps_epi32(fx);
  n = _mm256_add_epi32(n, _mm256_set1_epi32(0x7f));
  n = _mm256_slli_epi32(n, 23);
  return _mm256_mul_ps(y, _mm256_castsi256_ps(n));
}

void gemm_nn(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
             std::size_t n) {
  const std::size_t nv = n & ~std::size_t{7};
  for (std::size_t i = 0; i < m; ++i) {
    float* ci = c + i * n;
    const float* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = ai[p];
      if (av == 0.0f) continue;
      const __m256 va = _mm256_set1_ps(av);
      const float* bp = b + p * n;
      std::size_t j = 0;
      for (; j < nv; j += 8) {
        __m256 vc = _mm256_loadu_ps(ci + j);
        vc = _mm256_fmadd_ps(va, _mm256_loadu_ps(bp + j), vc);
        _mm256_storeu_ps(ci + j, vc);
      }
      for (; j < n; ++j) ci[j] = std::fma(av, bp[j], ci[j]);
    }
  }
}

void gemm_tn(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
             std::size_t n) {
  const std::size_t nv = n & ~std::size_t{7};
  for (std::size_t i = 0; i < m; ++i) {
    const float* ai = a + i * k;
    const float* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = ai[p];
      if (av == 0.0f) continue;
      const __m256 va = _mm256_set1_ps(av);
      float* cp = c + p * n;
      std::size_t j = 0;
      for (; j < nv; j += 8) {
        __m256 vc = _mm256_loadu_ps(cp + j);
        vc = _mm256_fmadd_ps(va, _mm256_loadu_ps(bi + j), vc);
        _mm256_storeu_ps(cp + j, vc);
      }
      for (; j < n; ++j) cp[j] = std::fma(av, bi[j], cp[j]);
    }
  }
}

void gemm_nt(const float* a, const float* b, float* c, std::size_t m, std::size_t n,
             std::size_t k) {
  const std::size_t nv = n & ~std::size_t{7};
  for (std::size_t i = 0; i < m; ++i) {
    const float* ai = a + i * n;
    float* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const float* bp = b + p * n;
      __m256 acc = _mm256_setzero_ps();
      std::size_t j = 0;
      for (; j < nv; j += 8) acc = _mm256_fmadd_ps(_mm256_loadu_ps(ai + j), _mm256_loadu_ps(bp + j), acc);
      float s = hsum(acc);
      for (; j < n; ++j) s = std::fma(ai[j], bp[j], s);
      ci[p] += s;
    }
  }
}

void sq_dists(const float* x, std::size_t n, std::size_t d, const float* q, float* out) {
  const std::size_t dv = d & ~std::size_t{7};
  for (std::size_t j = 0; j < n; ++j) {
    const float* xj = x + j * d;
    __m256 acc = _mm256_setzero_ps();
    std::size_t t = 0;
    for (; t < dv; t += 8) {
      const __m256 diff = _mm256_sub_ps(_mm256_loadu_ps(xj + t), _mm256_loadu_ps(q + t));
      acc = _mm256_fmadd_ps(diff, diff, acc);
    }
    float s = hsum(acc);
    for (; t < d; ++t) {
      const float diff = xj[t] - q[t];
      s = std::fma(diff, diff, s);
    }
    out[j] = s;
  }
}

void gaussian_row(const float* dist, std::size_t n, float beta, float* out, double* sum,
                  double* weighted) {
  const std::size_t nv = n & ~std::size_t{7};
  const __m256 vneg_beta = _mm256_set1_ps(-beta);
  const __m256 cutoff = _mm256_set1_ps(-87.0f);
  __m256d s_lo = _mm256_setzero_pd(), s_hi = _mm256_setzero_pd();
  __m256d w_lo = _mm256_setzero_pd(), w_hi = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j < nv; j += 8) {
    const __m256 d = _mm256_loadu_ps(dist + j);
    const __m256 arg = _mm256_mul_ps(vneg_beta, d);
    const __m256 keep = _mm256_cmp_ps(arg, cutoff, _CMP_GE_OQ);
    const __m256 v = _mm256_and_ps(exp_ps(arg), keep);
    _mm256_storeu_ps(out + j, v);
    const __m256d v_lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
    const __m256d v_hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
    const __m256d d_lo = _mm256_cvtps_pd(_mm256_castps256_ps128(d));
    const __m256d d_hi = _mm256_cvtps_pd(_mm256_extractf128_ps(d, 1));
    s_lo = _mm256_add_pd(s_lo, v_lo);
    s_hi = _mm256_add_pd(s_hi, v_hi);
    w_lo = _mm256_fmadd_pd(d_lo, v_lo, w_lo);
    w_hi = _mm256_fmadd_pd(d_hi, v_hi, w_hi);
  }
  double s = hsum(_mm256_add_pd(s_lo, s_hi));
  double w = hsum(_mm256_add_pd(w_lo, w_hi));
  for (; j < n; ++j) {
    const float arg = -beta * dist[j];
    const float v = arg < -87.0f ? 0.0f : std::exp(arg);
    out[j] = v;
    s += v;
    w += static_cast<double>(dist[j]) * v;
  }
  *sum = s;
  *weighted = w;
}

double tsne_forces(const float* yx, const float* yy, const float* p, std::size_t n,
                   float* attr_x, float* attr_y, float* rep_x, float* rep_y) {
  for (std::size_t i = 0; i < n; ++i) attr_x[i] = attr_y[i] = rep_x[i] = rep_y[i] = 0.0f;
  const __m256 one = _mm256_set1_ps(1.0f);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const float xi = yx[i];
    const float yi = yy[i];
    const __m256 vxi = _mm256_set1_ps(xi);
    const __m256 vyi = _mm256_set1_ps(yi);
    const float* pi = p + i * n;
    __m256 ax = _mm256_setzero_ps(), ay = _mm256_setzero_ps();
    __m256 rx = _mm256_setzero_ps(), ry = _mm256_setzero_ps();
    __m256 zi = _mm256_setzero_ps();
    std::size_t j = i + 1;
    for (; j + 8 <= n; j += 8) {
      const __m256 dx = _mm256_sub_ps(vxi, _mm256_loadu_ps(yx + j));
      const __m256 dy = _mm256_sub_ps(vyi, _mm256_loadu_ps(yy + j));
      const __m256 d2 = _mm256_fmadd_ps(dy, dy, _mm256_fmadd_ps(dx, dx, one));
      const __m256 w = _mm256_div_ps(one, d2);
      const __m256 pw = _mm256_mul_ps(_mm256_loadu_ps(pi + j), w);
      const __m256 ww = _mm256_mul_ps(w, w);
      zi = _mm256_add_ps(zi, w);
      const __m256 pwx = _mm256_mul_ps(pw, dx);
      const __m256 pwy = _mm256_mul_ps(pw, dy);
      const __m256 wwx = _mm256_mul_ps(ww, dx);
      const __m256 wwy = _mm256_mul_ps(ww, dy);
      ax = _mm256_add_ps(ax, pwx);
      ay = _mm256_add_ps(ay, pwy);
      rx = _mm256_add_ps(rx, wwx);
      ry = _mm256_add_ps(ry, wwy);
      _mm256_storeu_ps(attr_x + j, _mm256_sub_ps(_mm256_loadu_ps(attr_x + j), pwx));
      _mm256_storeu_ps(attr_y + j, _mm256_sub_ps(_mm256_loadu_ps(attr_y + j), pwy));
      _mm256_storeu_ps(rep_x + j, _mm256_sub_ps(_mm256_loadu_ps(rep_x + j), wwx));
      _mm256_storeu_ps(rep_y + j, _mm256_sub_ps(_mm256_loadu_ps(rep_y + j), wwy));
    }
    float sax = hsum(ax), say = hsum(ay), srx = hsum(rx), sry = hsum(ry), szi = hsum(zi);
    for (; j < n; ++j) {
      const float dx = xi - yx[j];
      const float dy = yi - yy[j];
      const float w = 1.0f / (1.0f + dx * dx + dy * dy);
      const float pw = pi[j] * w;
      const float ww = w * w;
      szi += w;
      sax += pw * dx;
      say += pw * dy;
      srx += ww * dx;
      sry += ww * dy;
      attr_x[j] -= pw * dx;
      attr_y[j] -= pw * dy;
      rep_x[j] -= ww * dx;
      rep_y[j] -= ww * dy;
    }
    attr_x[i] += sax;
    attr_y[i] += say;
    rep_x[i] += srx;
    rep_y[i] += sry;
    z += 2.0 * szi;
  }
  return z;
}

std::size_t radius_2d(const float* xs, const float* ys, std::size_t n, float qx, float qy,
                      float eps2, std::uint32_t* out_idx) {
  const __m256 vqx = _mm256_set1_ps(qx);
  const __m256 vqy = _mm256_set1_ps(qy);
  const __m256 veps = _mm256_set1_ps(eps2);
  std::size_t count = 0;
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    const __m256 dx = _mm256_sub_ps(_mm256_loadu_ps(xs + j), vqx);
    const __m256 dy = _mm256_sub_ps(_mm256_loadu_ps(ys + j), vqy);
    // Same rounding as the scalar path: no FMA contraction here.
    const __m256 d2 = _mm256_add_ps(_mm256_mul_ps(dx, dx), _mm256_mul_ps(dy, dy));
    unsigned mask = static_cast<unsigned>(_mm256_movemask_ps(_mm256_cmp_ps(d2, veps, _CMP_LE_OQ)));
    while (mask != 0) {
      const unsigned bit = static_cast<unsigned>(__builtin_ctz(mask));
      out_idx[count++] = static_cast<std::uint32_t>(j + bit);
      mask &= mask - 1;
    }
  }
  for (; j < n; ++j) {
    const float dx = xs[j] - qx;
    const float dy = ys[j] - qy;
    if (dx * dx + dy * dy <= eps2) out_idx[count++] = static_cast<std::uint32_t>(j);
  }
  return count;
}

}  // namespace

const Kernels table{Isa::avx2, "avx2", gemm_nn, gemm_tn, gemm_nt, sq_dists,
                    gaussian_row, tsne_forces, radius_2d};

}  // namespace csc::simd::avx2
