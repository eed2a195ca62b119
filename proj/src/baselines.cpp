#include "csc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "csc/errors.hpp"
#include "csc/pca.hpp"
#include "csc/random.hpp"

namespace csc {
namespace {

double sq_dist(const Matrix& x, std::size_t i, const MatrixD& c, std::size_t j) {
  double s = 0.0;
  for (std::size_t d = 0; d < x.cols; ++d) {
    const double t = x(i, d) - c(j, d);
    s += t * t;
  }
  return s;
}

std::vector<std::vector<std::size_t>> members_by_class(std::span<const int> labels, int num_classes) {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) throw LabelRangeError("label out of range");
    out[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return out;
}

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), x.cols);
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(x.row(rows[r]).begin(), x.row(rows[r]).end(), out.row(r).begin());
  return out;
}

}  // namespace

std::vector<std::size_t> DetectionMask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < flagged.size(); ++i)
    if (flagged[i]) out.push_back(i);
  return out;
}

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters) {
  const std::size_t n = points.rows, d = points.cols;
  if (k < 1) throw ConfigError("k must be at least 1");
  if (static_cast<std::size_t>(k) > n) throw ConfigError("k exceeds the number of points");
  const auto K = static_cast<std::size_t>(k);
  Rng rng(mix_seed(seed, 0xc3a7));

  KMeansResult r;
  r.centroids = MatrixD(K, d);
  auto set_centroid = [&](std::size_t j, std::size_t i) {
    for (std::size_t t = 0; t < d; ++t) r.centroids(j, t) = points(i, t);
  };
  set_centroid(0, uniform_index(rng, n));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t j = 1; j < K; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(points, i, r.centroids, j - 1));
      total += nearest[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double u = uniform01(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        u -= nearest[i];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, n);
    }
    set_centroid(j, pick);
  }

  r.assignment.assign(n, -1);
  for (int it = 0; it < std::max(1, max_iters); ++it) {
    bool changed = false;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist(points, i, r.centroids, 0);
      for (std::size_t j = 1; j < K; ++j) {
        const double dj = sq_dist(points, i, r.centroids, j);
        if (dj < bd) {
          bd = dj;
          best = static_cast<int>(j);
        }
      }
      if (r.assignment[i] != best) changed = true;
      r.assignment[i] = best;
      sse += bd;
    }
    r.objective.push_back(sse);
    r.iterations = it + 1;
    if (!changed && it > 0) break;

    MatrixD sums(K, d, 0.0);
    std::vector<std::size_t> counts(K, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(r.assignment[i]);
      ++counts[j];
      for (std::size_t t = 0; t < d; ++t) sums(j, t) += points(i, t);
    }
    // An emptied cluster keeps its previous centroid.
    for (std::size_t j = 0; j < K; ++j)
      if (counts[j])
        for (std::size_t t = 0; t < d; ++t) r.centroids(j, t) = sums(j, t) / static_cast<double>(counts[j]);
  }
  return r;
}

std::vector<double> spectral_scores(const Matrix& features) {
  const std::size_t n = features.rows, d = features.cols;
  std::vector<double> scores(n, 0.0);
  if (n == 0 || d == 0) return scores;
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < d; ++t) mean[t] += features(i, t);
  for (double& m : mean) m /= static_cast<double>(n);
  MatrixD a(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < d; ++t) a(i, t) = features(i, t) - mean[t];
  MatrixD gram(d, d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < d; ++s) {
      const double v = a(i, s);
      if (v == 0.0) continue;
      for (std::size_t t = 0; t < d; ++t) gram(s, t) += v * a(i, t);
    }

  Rng rng(0x55);
  std::vector<double> v(d), w(d);
  for (double& x : v) x = standard_normal(rng);
  for (int it = 0; it < 20000; ++it) {
    for (std::size_t s = 0; s < d; ++s) {
      double acc = 0.0;
      for (std::size_t t = 0; t < d; ++t) acc += gram(s, t) * v[t];
      w[s] = acc;
    }
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return scores;
    double delta = 0.0, dot = 0.0;
    for (std::size_t s = 0; s < d; ++s) dot += w[s] / norm * v[s];
    const double sign = dot < 0 ? -1.0 : 1.0;
    for (std::size_t s = 0; s < d; ++s) {
      const double nv = sign * w[s] / norm;
      delta = std::max(delta, std::abs(nv - v[s]));
      v[s] = nv;
    }
    if (delta < 1e-14) break;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double p = 0.0;
    for (std::size_t t = 0; t < d; ++t) p += a(i, t) * v[t];
    scores[i] = p * p;
  }
  return scores;
}

DetectionMask spectral_signature_detect(const FeatureMatrix& features, std::span<const int> labels,
                                        int num_classes, double removal_fraction) {
  if (!(removal_fraction > 0.0 && removal_fraction < 1.0))
    throw ConfigError("removal fraction must lie in (0, 1)");
  if (features.rows != labels.size()) throw ConsistencyError("features and labels differ in count");
  if (features.rows == 0) throw EmptyInputError("spectral signatures need data");
  DetectionMask mask;
  mask.method = "spectral_signature";
  mask.flagged.assign(labels.size(), 0);
  mask.metadata["removal_fraction"] = std::to_string(removal_fraction);
  for (const auto& members : members_by_class(labels, num_classes)) {
    if (members.size() <= 1) continue;
    const auto scores = spectral_scores(gather_rows(features, members));
    std::vector<std::size_t> order(members.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const auto take = static_cast<std::size_t>(std::llround(removal_fraction * static_cast<double>(members.size())));
    for (std::size_t r = 0; r < std::min(take, order.size()); ++r) mask.flagged[members[order[r]]] = 1;
  }
  return mask;
}

DetectionMask spectral_signature_detect(const Model& model, const LabeledDataset& data, double removal_fraction) {
  return spectral_signature_detect(extract_features(model, data), data.labels, data.num_classes, removal_fraction);
}

DetectionMask activation_cluster_detect(const FeatureMatrix& features, std::span<const int> labels,
                                        int num_classes, const ActivationClusterOptions& options) {
  if (options.proj_dims < 2) throw ConfigError("activation clustering needs proj_dims >= 2");
  if (features.rows != labels.size()) throw ConsistencyError("features and labels differ in count");
  DetectionMask mask;
  mask.method = "activation_clustering";
  mask.flagged.assign(labels.size(), 0);
  mask.metadata["proj_dims"] = std::to_string(options.proj_dims);
  const auto classes = members_by_class(labels, num_classes);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto& members = classes[c];
    if (members.size() < 2) continue;
    const Matrix proj = pca_project(gather_rows(features, members), options.proj_dims);
    const auto km = kmeans(proj, 2, mix_seed(options.seed, c), options.max_iters);
    std::size_t ones = 0;
    for (int a : km.assignment) ones += a == 1;
    const std::size_t zeros = members.size() - ones;
    if (ones == zeros) continue;
    const int smaller = ones < zeros ? 1 : 0;
    for (std::size_t r = 0; r < members.size(); ++r)
      if (km.assignment[r] == smaller) mask.flagged[members[r]] = 1;
  }
  return mask;
}

DetectionMask activation_cluster_detect(const Model& model, const LabeledDataset& data,
                                        const ActivationClusterOptions& options) {
  return activation_cluster_detect(extract_features(model, data), data.labels, data.num_classes, options);
}

UnlearnResult unlearn(const Model& model, const LabeledDataset& subset, const UnlearnOptions& options) {
  if (subset.empty()) throw EmptyInputError("unlearning needs a non-empty subset");
  if (options.epochs < 0) throw ConfigError("unlearning epochs must be non-negative");
  if (options.batch_size < 1) throw ConfigError("unlearning batch size must be at least 1");
  UnlearnResult out{model, {}};
  const bool was_frozen = out.model.freeze_extractor;
  out.model.freeze_extractor = false;
  OptimizerState state = make_optimizer_state(out.model);
  const std::size_t px = subset.shape.pixels();
  const auto bs = static_cast<std::size_t>(options.batch_size);
  std::vector<float> images;
  std::vector<int> labels;
  Parameters<float> grads;
  for (int e = 0; e < options.epochs; ++e) {
    Rng rng(mix_seed(options.seed, 0x0a11 + static_cast<std::uint64_t>(e)));
    const auto order = random_permutation(subset.size(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t n = std::min(bs, order.size() - start);
      images.resize(n * px);
      labels.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        const auto img = subset.image(order[start + k]);
        std::copy(img.begin(), img.end(), images.begin() + static_cast<std::ptrdiff_t>(k * px));
        labels[k] = subset.labels[order[start + k]];
      }
      double loss = loss_and_gradients<float>(out.model.arch, out.model.params, images, labels, grads);
      if (!std::isfinite(loss) || loss >= options.loss_clamp) {
        loss = options.loss_clamp;
        grads = Parameters<float>::zeros_like(out.model.arch);
      } else {
        for (auto* t : grads.tensors())
          for (float& g : *t) g = -g;
      }
      loss_sum += loss;
      ++batches;
      sgd_step(out.model, grads, options.learning_rate, options.momentum, state);
    }
    out.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
  }
  out.model.freeze_extractor = was_frozen;
  return out;
}

}  // namespace csc
