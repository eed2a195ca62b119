#include "csc/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "csc/errors.hpp"
#include "csc/pca.hpp"
#include "csc/random.hpp"
#include "csc/simd.hpp"

namespace csc {
namespace {

constexpr double kMinProbability = 1e-12;

// Calibrates one conditional distribution to the target entropy. `dist`
// excludes the point itself. Writes unnormalized-then-normalized P_j|i.
void calibrate_row(const std::vector<float>& dist, double log_perplexity, std::vector<float>& out) {
  const auto& k = simd::active();
  const std::size_t n = dist.size();
  out.resize(n);

  // Shifting by the nearest distance leaves the normalized distribution
  // unchanged and keeps the largest term at exp(0).
  std::vector<float> shifted(dist);
  const float dmin = *std::min_element(shifted.begin(), shifted.end());
  for (float& d : shifted) d -= dmin;

  double beta = 1.0;
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    double weighted = 0.0;
    k.gaussian_row(shifted.data(), n, static_cast<float>(beta), out.data(), &sum, &weighted);
    const double entropy = std::log(sum) + beta * weighted / sum;
    const double diff = entropy - log_perplexity;
    if (std::abs(diff) < 1e-5) break;
    if (diff > 0) {
      lo = beta;
      beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
    } else {
      hi = beta;
      beta = 0.5 * (beta + lo);
    }
  }
  for (float& v : out) v = static_cast<float>(v / sum);
}

}  // namespace

std::vector<float> joint_probabilities(const Matrix& x, double perplexity) {
  const std::size_t n = x.rows;
  const auto& k = simd::active();
  std::vector<float> p(n * n, 0.0f);
  std::vector<float> drow(n), dist(n - 1), cond;
  const double log_perp = std::log(perplexity);
  for (std::size_t i = 0; i < n; ++i) {
    k.sq_dists(x.data.data(), n, x.cols, x.data.data() + i * x.cols, drow.data());
    std::copy(drow.begin(), drow.begin() + i, dist.begin());
    std::copy(drow.begin() + i + 1, drow.end(), dist.begin() + i);
    calibrate_row(dist, log_perp, cond);
    float* pi = p.data() + i * n;
    std::copy(cond.begin(), cond.begin() + i, pi);
    std::copy(cond.begin() + i, cond.end(), pi + i + 1);
  }
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    p[i * n + i] = 0.0f;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::max((static_cast<double>(p[i * n + j]) + p[j * n + i]) * scale, kMinProbability);
      p[i * n + j] = p[j * n + i] = static_cast<float>(v);
    }
  }
  return p;
}

double tsne_kl_divergence(const std::vector<float>& p, const Matrix& y) {
  const std::size_t n = y.rows;
  double z = 0.0;
  double cross = 0.0;   // sum p log w
  double entropy = 0.0; // sum p log p
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dx = static_cast<double>(y(i, 0)) - y(j, 0);
      const double dy = static_cast<double>(y(i, 1)) - y(j, 1);
      const double w = 1.0 / (1.0 + dx * dx + dy * dy);
      const double pij = p[i * n + j];
      z += w;
      cross += pij * std::log(w);
      entropy += pij * std::log(pij);
      mass += pij;
    }
  // KL = sum p log p - sum p log (w / Z)
  return entropy - cross + mass * std::log(z);
}

TsneResult tsne_embed(const Matrix& features, const TsneConfig& cfg) {
  const std::size_t n = features.rows;
  if (!(cfg.perplexity > 0.0)) throw ConfigError("perplexity must be positive");
  if (static_cast<double>(n) < 3.0 * cfg.perplexity)
    throw ConfigError("t-SNE needs at least 3 * perplexity points (have " + std::to_string(n) + ")");
  if (cfg.iterations < 1) throw ConfigError("t-SNE needs at least one iteration");
  for (float v : features.data)
    if (!std::isfinite(v)) throw DataError("t-SNE input contains a non-finite value");

  const Matrix x = static_cast<int>(features.cols) > cfg.pca_dims ? pca_project(features, cfg.pca_dims) : features;
  const std::vector<float> p = joint_probabilities(x, cfg.perplexity);

  const double lr = cfg.learning_rate > 0.0 ? cfg.learning_rate : std::max(50.0, static_cast<double>(n) / 12.0);

  Rng rng(mix_seed(cfg.seed, 0x75e));
  std::vector<float> yx(n), yy(n);
  for (std::size_t i = 0; i < n; ++i) {
    yx[i] = static_cast<float>(cfg.init_sigma * standard_normal(rng));
    yy[i] = static_cast<float>(cfg.init_sigma * standard_normal(rng));
  }
  std::vector<float> ax(n), ay(n), rx(n), ry(n);
  std::vector<double> ux(n, 0.0), uy(n, 0.0), gx(n, 1.0), gy(n, 1.0);

  auto embedding = [&] {
    Matrix e(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      e(i, 0) = yx[i];
      e(i, 1) = yy[i];
    }
    return e;
  };

  TsneResult result;
  const auto& k = simd::active();
  for (int it = 0; it < cfg.iterations; ++it) {
    const double exag = it < cfg.exaggeration_iterations ? cfg.early_exaggeration : 1.0;
    const double momentum = it < cfg.momentum_switch_iteration ? cfg.initial_momentum : cfg.final_momentum;
    const double z = k.tsne_forces(yx.data(), yy.data(), p.data(), n, ax.data(), ay.data(), rx.data(), ry.data());
    const double inv_z = 1.0 / std::max(z, std::numeric_limits<double>::min());
    for (std::size_t i = 0; i < n; ++i) {
      const double grad_x = 4.0 * (exag * ax[i] - rx[i] * inv_z);
      const double grad_y = 4.0 * (exag * ay[i] - ry[i] * inv_z);
      gx[i] = (grad_x > 0) != (ux[i] > 0) ? gx[i] + 0.2 : gx[i] * 0.8;
      gy[i] = (grad_y > 0) != (uy[i] > 0) ? gy[i] + 0.2 : gy[i] * 0.8;
      gx[i] = std::max(gx[i], 0.01);
      gy[i] = std::max(gy[i], 0.01);
      ux[i] = momentum * ux[i] - lr * gx[i] * grad_x;
      uy[i] = momentum * uy[i] - lr * gy[i] * grad_y;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      yx[i] = static_cast<float>(yx[i] + ux[i]);
      yy[i] = static_cast<float>(yy[i] + uy[i]);
      mx += yx[i];
      my += yy[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      yx[i] = static_cast<float>(yx[i] - mx);
      yy[i] = static_cast<float>(yy[i] - my);
    }
    const int done = it + 1;
    if (std::find(cfg.kl_checkpoints.begin(), cfg.kl_checkpoints.end(), done) != cfg.kl_checkpoints.end() &&
        done != cfg.iterations)
      result.kl.emplace_back(done, tsne_kl_divergence(p, embedding()));
  }
  result.embedding = embedding();
  for (float v : result.embedding.data)
    if (!std::isfinite(v)) throw Error("t-SNE diverged to a non-finite embedding");
  result.kl.emplace_back(cfg.iterations, tsne_kl_divergence(p, result.embedding));
  return result;
}

}  // namespace csc
