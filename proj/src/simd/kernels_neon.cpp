// aarch64 only. NEON is mandatory on that architecture, so no runtime check.

#include <arm_neon.h>

#include <cmath>

#include "csc/simd.hpp"

namespace csc::simd::neon {
namespace {

void gemm_nn(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
             std::size_t n) {
  const std::size_t nv = n & ~std::size_t{3};
  for (std::size_t i = 0; i < m; ++i) {
    float* ci = c + i * n;
    const float* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = ai[p];
      if (av == 0.0f) continue;
      const float32x4_t va = vdupq_n_f32(av);
      const float* bp = b + p * n;
      std::size_t j = 0;
      for (; j < nv; j += 4) vst1q_f32(ci + j, vfmaq_f32(vld1q_f32(ci + j), va, vld1q_f32(bp + j)));
      for (; j < n; ++j) ci[j] = std::fma(av, bp[j], ci[j]);
    }
  }
}

void gemm_tn(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
             std::size_t n) {
  const std::size_t nv = n & ~std::size_t{3};
  for (std::size_t i = 0; i < m; ++i) {
    const float* ai = a + i * k;
    const float* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = ai[p];
      if (av == 0.0f) continue;
      const float32x4_t va = vdupq_n_f32(av);
      float* cp = c + p * n;
      std::size_t j = 0;
      for (; j < nv; j += 4) vst1q_f32(cp + j, vfmaq_f32(vld1q_f32(cp + j), va, vld1q_f32(bi + j)));
      for (; j < n; ++j) cp[j] = std::fma(av, bi[j], cp[j]);
    }
  }
}

void gemm_nt(const float* a, const float* b, float* c, std::size_t m, std::size_t n,
             std::size_t k) {
  const std::size_t nv = n & ~std::size_t{3};
  for (std::size_t i = 0; i < m; ++i) {
    const float* ai = a + i * n;
    float* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const float* bp = b + p * n;
      float32x4_t acc = vdupq_n_f32(0.0f);
      std::size_t j = 0;
      for (; j < nv; j += 4) acc = vfmaq_f32(acc, vld1q_f32(ai + j), vld1q_f32(bp + j));
      float s = vaddvq_f32(acc);
      for (; j < n; ++j) s = std::fma(ai[j], bp[j], s);
      ci[p] += s;
    }
  }
}

void sq_dists(const float* x, std::size_t n, std::size_t d, const float* q, float* out) {
  const std::size_t dv = d & ~std::size_t{3};
  for (std::size_t j = 0; j < n; ++j) {
    const float* xj = x + j * d;
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t t = 0;
    for (; t < dv; t += 4) {
      const float32x4_t diff = vsubq_f32(vld1q_f32(xj + t), vld1q_f32(q + t));
      acc = vfmaq_f32(acc, diff, diff);
    }
    float s = vaddvq_f32(acc);
    for (; t < d; ++t) {
      const float diff = xj[t] - q[t];
      s = std::fma(diff, diff, s);
    }
    out[j] = s;
  }
}

void gaussian_row(const float* dist, std::size_t n, float beta, float* out, double* sum,
                  double* weighted) {
  double s = 0.0;
  double w = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
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
  const float32x4_t one = vdupq_n_f32(1.0f);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const float xi = yx[i];
    const float yi = yy[i];
    const float32x4_t vxi = vdupq_n_f32(xi);
    const float32x4_t vyi = vdupq_n_f32(yi);
    const float* pi = p + i * n;
    float32x4_t ax = vdupq_n_f32(0.0f), ay = ax, rx = ax, ry = ax, zi = ax;
    std::size_t j = i + 1;
    for (; j + 4 <= n; j += 4) {
      const float32x4_t dx = vsubq_f32(vxi, vld1q_f32(yx + j));
      const float32x4_t dy = vsubq_f32(vyi, vld1q_f32(yy + j));
      const float32x4_t d2 = vfmaq_f32(vfmaq_f32(one, dx, dx), dy, dy);
      const float32x4_t w = vdivq_f32(one, d2);
      const float32x4_t pw = vmulq_f32(vld1q_f32(pi + j), w);
      const float32x4_t ww = vmulq_f32(w, w);
      zi = vaddq_f32(zi, w);
      const float32x4_t pwx = vmulq_f32(pw, dx);
      const float32x4_t pwy = vmulq_f32(pw, dy);
      const float32x4_t wwx = vmulq_f32(ww, dx);
      const float32x4_t wwy = vmulq_f32(ww, dy);
      ax = vaddq_f32(ax, pwx);
      ay = vaddq_f32(ay, pwy);
      rx = vaddq_f32(rx, wwx);
      ry = vaddq_f32(ry, wwy);
      vst1q_f32(attr_x + j, vsubq_f32(vld1q_f32(attr_x + j), pwx));
      vst1q_f32(attr_y + j, vsubq_f32(vld1q_f32(attr_y + j), pwy));
      vst1q_f32(rep_x + j, vsubq_f32(vld1q_f32(rep_x + j), wwx));
      vst1q_f32(rep_y + j, vsubq_f32(vld1q_f32(rep_y + j), wwy));
    }
    float sax = vaddvq_f32(ax), say = vaddvq_f32(ay), srx = vaddvq_f32(rx), sry = vaddvq_f32(ry);
    float szi = vaddvq_f32(zi);
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
  const float32x4_t vqx = vdupq_n_f32(qx);
  const float32x4_t vqy = vdupq_n_f32(qy);
  const float32x4_t veps = vdupq_n_f32(eps2);
  std::size_t count = 0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const float32x4_t dx = vsubq_f32(vld1q_f32(xs + j), vqx);
    const float32x4_t dy = vsubq_f32(vld1q_f32(ys + j), vqy);
    const float32x4_t d2 = vaddq_f32(vmulq_f32(dx, dx), vmulq_f32(dy, dy));
    const uint32x4_t le = vcleq_f32(d2, veps);
    std::uint32_t lanes[4];
    vst1q_u32(lanes, le);
    for (unsigned t = 0; t < 4; ++t)
      if (lanes[t] != 0) out_idx[count++] = static_cast<std::uint32_t>(j + t);
  }
  for (; j < n; ++j) {
    const float dx = xs[j] - qx;
    const float dy = ys[j] - qy;
    if (dx * dx + dy * dy <= eps2) out_idx[count++] = static_cast<std::uint32_t>(j);
  }
  return count;
}

}  // namespace

const Kernels table{Isa::neon, "neon", gemm_nn, gemm_tn, gemm_nt, sq_dists,
                    gaussian_row, tsne_forces, radius_2d};

}  // namespace csc::simd::neon
