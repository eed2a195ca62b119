#include "oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "csc/random.hpp"

namespace oracle {

std::vector<int> dbscan(const csc::Matrix& points, double eps, int min_pts) {
  const std::size_t n = points.rows;
  std::vector<std::vector<std::size_t>> nb(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = static_cast<double>(points(i, 0)) - points(j, 0);
      const double dy = static_cast<double>(points(i, 1)) - points(j, 1);
      if (dx * dx + dy * dy <= eps * eps) nb[i].push_back(j);
    }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = nb[i].size() >= static_cast<std::size_t>(min_pts);

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    if (core[i])
      for (std::size_t j : nb[i])
        if (core[j]) parent[find(i)] = find(j);

  // Components numbered by their lowest core index.
  std::map<std::size_t, std::size_t> lowest;  // root -> lowest core
  for (std::size_t i = 0; i < n; ++i)
    if (core[i] && !lowest.count(find(i))) lowest[find(i)] = i;
  std::vector<std::pair<std::size_t, std::size_t>> order;
  for (auto [root, low] : lowest) order.emplace_back(low, root);
  std::sort(order.begin(), order.end());
  std::map<std::size_t, int> id;
  for (std::size_t k = 0; k < order.size(); ++k) id[order[k].second] = static_cast<int>(k);

  std::vector<int> out(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      out[i] = id[find(i)];
      continue;
    }
    int best = -1;
    for (std::size_t j : nb[i])
      if (core[j]) {
        const int c = id[find(j)];
        if (best < 0 || c < best) best = c;
      }
    out[i] = best;
  }
  return out;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0) != (b[i] < 0)) return false;
    if (a[i] < 0) continue;
    auto [it1, new1] = ab.emplace(a[i], b[i]);
    auto [it2, new2] = ba.emplace(b[i], a[i]);
    if (it1->second != b[i] || it2->second != a[i]) return false;
  }
  return true;
}

long double cross_entropy(const csc::Matrix& logits, const std::vector<int>& labels) {
  long double total = 0;
  for (std::size_t r = 0; r < logits.rows; ++r) {
    long double mx = -std::numeric_limits<long double>::infinity();
    for (std::size_t c = 0; c < logits.cols; ++c) mx = std::max<long double>(mx, logits(r, c));
    long double s = 0;
    for (std::size_t c = 0; c < logits.cols; ++c) s += std::exp(static_cast<long double>(logits(r, c)) - mx);
    total += -(static_cast<long double>(logits(r, static_cast<std::size_t>(labels[r]))) - mx - std::log(s));
  }
  return total / static_cast<long double>(logits.rows);
}

std::vector<double> spectral_scores_svd(const csc::Matrix& features) {
  Eigen::MatrixXd a(features.rows, features.cols);
  for (std::size_t i = 0; i < features.rows; ++i)
    for (std::size_t j = 0; j < features.cols; ++j) a(i, j) = features(i, j);
  a.rowwise() -= a.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
  const Eigen::VectorXd v = svd.matrixV().col(0);
  const Eigen::VectorXd p = a * v;
  std::vector<double> out(features.rows);
  for (std::size_t i = 0; i < features.rows; ++i) out[i] = p(i) * p(i);
  return out;
}

double sse(const csc::Matrix& points, const std::vector<int>& labels, int k) {
  double total = 0;
  for (int c = 0; c < k; ++c) {
    std::vector<double> mean(points.cols, 0.0);
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < points.rows; ++i)
      if (labels[i] == c) {
        ++cnt;
        for (std::size_t d = 0; d < points.cols; ++d) mean[d] += points(i, d);
      }
    if (!cnt) continue;
    for (double& m : mean) m /= static_cast<double>(cnt);
    for (std::size_t i = 0; i < points.rows; ++i)
      if (labels[i] == c)
        for (std::size_t d = 0; d < points.cols; ++d) total += (points(i, d) - mean[d]) * (points(i, d) - mean[d]);
  }
  return total;
}

double best_bipartition_sse(const csc::Matrix& points, std::vector<int>* best_labels) {
  const std::size_t n = points.rows;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> labels(n);
  // Point 0 is always in group 0, which removes mirrored splits.
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
    for (std::size_t i = 0; i < n; ++i) labels[i] = i == 0 ? 0 : static_cast<int>((mask >> (i - 1)) & 1);
    const double s = sse(points, labels, 2);
    if (s < best) {
      best = s;
      if (best_labels) *best_labels = labels;
    }
  }
  return best;
}

GradientCheck check_gradients(const csc::Architecture& arch, std::uint64_t seed, std::size_t batch, double step) {
  using csc::Parameters;
  const csc::Model m = csc::make_model(arch, seed);
  Parameters<double> p = csc::convert_parameters<double>(m.params);
  csc::Rng rng(seed ^ 0xfeed);
  // Non-zero biases so that every bias gradient is exercised.
  for (auto* t : p.tensors())
    for (double& v : *t) v += 0.05 * csc::standard_normal(rng);
  std::vector<double> images(batch * arch.input.pixels());
  for (double& v : images) v = csc::uniform01(rng);
  std::vector<int> labels(batch);
  for (int& y : labels) y = static_cast<int>(csc::uniform_index(rng, static_cast<std::size_t>(arch.num_outputs)));

  Parameters<double> grads;
  csc::loss_and_gradients<double>(arch, p, images, labels, grads);

  static const char* names[] = {"conv1_w", "conv1_b", "conv2_w", "conv2_b", "fc_w", "fc_b", "head_w", "head_b"};
  GradientCheck out;
  auto tensors = p.tensors();
  const auto gtensors = grads.tensors();
  Parameters<double> scratch;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    for (std::size_t i = 0; i < tensors[t]->size(); ++i) {
      double& w = (*tensors[t])[i];
      const double saved = w;
      w = saved + step;
      const double lp = csc::loss_and_gradients<double>(arch, p, images, labels, scratch);
      w = saved - step;
      const double lm = csc::loss_and_gradients<double>(arch, p, images, labels, scratch);
      w = saved;
      const double numeric = (lp - lm) / (2 * step);
      const double analytic = (*gtensors[t])[i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      const double rel = std::abs(numeric - analytic) / denom;
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst_tensor = names[t];
      }
    }
  }
  return out;
}

}  // namespace oracle
