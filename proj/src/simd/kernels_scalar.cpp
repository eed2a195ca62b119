#include <cmath>

#include "csc/simd.hpp"

namespace csc::simd::scalar {
namespace {

void gemm_nn(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    float* ci = c + i * n;
    const float* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = ai[p];
      if (av == 0.0f) continue;
      const float* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void gemm_tn(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* ai = a + i * k;
    const float* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = ai[p];
      if (av == 0.0f) continue;
      float* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

void gemm_nt(const float* a, const float* b, float* c, std::size_t m, std::size_t n,
             std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* ai = a + i * n;
    float* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const float* bp = b + p * n;
      float acc = 0.0f;
      for (std::size_t j = 0; j < n; ++j) acc += ai[j] * bp[j];
      ci[p] += acc;
    }
  }
}

void sq_dists(const float* x, std::size_t n, std::size_t d, const float* q, float* out) {
  for (std::size_t j = 0; j < n; ++j) {
    const float* xj = x + j * d;
    float acc = 0.0f;
    for (std::size_t t = 0; t < d; ++t) {
      const float diff = xj[t] - q[t];
      acc += diff * diff;
    }
    out[j] = acc;
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
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const float xi = yx[i];
    const float yi = yy[i];
    const float* pi = p + i * n;
    float ax = 0.0f, ay = 0.0f, rx = 0.0f, ry = 0.0f, zi = 0.0f;
    for (std::size_t j = i + 1; j < n; ++j) {
      const float dx = xi - yx[j];
      const float dy = yi - yy[j];
      const float w = 1.0f / (1.0f + dx * dx + dy * dy);
      const float pw = pi[j] * w;
      const float ww = w * w;
      zi += w;
      ax += pw * dx;
      ay += pw * dy;
      rx += ww * dx;
      ry += ww * dy;
      attr_x[j] -= pw * dx;
      attr_y[j] -= pw * dy;
      rep_x[j] -= ww * dx;
      rep_y[j] -= ww * dy;
    }
    attr_x[i] += ax;
    attr_y[i] += ay;
    rep_x[i] += rx;
    rep_y[i] += ry;
    z += 2.0 * zi;
  }
  return z;
}

std::size_t radius_2d(const float* xs, const float* ys, std::size_t n, float qx, float qy,
                      float eps2, std::uint32_t* out_idx) {
  std::size_t count = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const float dx = xs[j] - qx;
    const float dy = ys[j] - qy;
    if (dx * dx + dy * dy <= eps2) out_idx[count++] = static_cast<std::uint32_t>(j);
  }
  return count;
}

}  // namespace

const Kernels table{Isa::scalar, "scalar", gemm_nn, gemm_tn, gemm_nt, sq_dists,
                    gaussian_row, tsne_forces, radius_2d};

}  // namespace csc::simd::scalar
