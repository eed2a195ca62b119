#include "csc/segregation.hpp"

#include <algorithm>
#include <set>

#include "csc/errors.hpp"

namespace csc {

void ClusterConfig::validate() const {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (min_pts < 1) throw ConfigError("min_pts must be at least 1");
  if (!(tsne.perplexity > 0.0)) throw ConfigError("perplexity must be positive");
  if (tsne.iterations < 1) throw ConfigError("t-SNE iterations must be at least 1");
}

std::vector<int> identify_suspicious(const ClusterAssignment& assignment, std::span<const int> labels,
                                     int num_classes) {
  if (labels.size() != assignment.size()) throw ConsistencyError("labels do not match the assignment");
  const auto k = static_cast<std::size_t>(assignment.num_clusters);
  std::vector<std::set<int>> seen(k);
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = assignment.cluster[i];
    if (c == kNoise) continue;
    ++sizes[static_cast<std::size_t>(c)];
    seen[static_cast<std::size_t>(c)].insert(labels[i]);
  }
  const std::size_t largest = sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
  std::vector<int> out;
  for (std::size_t c = 0; c < k; ++c) {
    const auto distinct = static_cast<int>(seen[c].size());
    if ((distinct == 1 || distinct == num_classes) && sizes[c] < largest) out.push_back(static_cast<int>(c));
  }
  return out;
}

std::vector<std::uint8_t> SegregationResult::mask(std::size_t n) const {
  std::vector<std::uint8_t> m(n, 0);
  for (std::size_t i : poisoned) m.at(i) = 1;
  return m;
}

EpochLog analyze_embedding(const Matrix& points, std::span<const int> labels, int num_classes,
                           double eps, int min_pts, ClusterAssignment* assignment_out) {
  ClusterAssignment a = dbscan(points, eps, min_pts);
  EpochLog log;
  log.num_clusters = a.num_clusters;
  const auto sizes = a.cluster_sizes();
  log.largest_cluster = sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
  log.noise_points = static_cast<std::size_t>(std::count(a.cluster.begin(), a.cluster.end(), kNoise));
  const auto ids = identify_suspicious(a, labels, num_classes);
  for (int id : ids) {
    SuspiciousCluster s;
    s.cluster_id = id;
    std::set<int> distinct;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a.cluster[i] == id) {
        s.members.push_back(i);
        distinct.insert(labels[i]);
      }
    s.labels.assign(distinct.begin(), distinct.end());
    log.suspicious.push_back(std::move(s));
  }
  if (assignment_out) *assignment_out = std::move(a);
  return log;
}

void aggregate_epochs(SegregationResult& result, std::size_t n, int min_occurrence) {
  if (min_occurrence < 1) throw ConfigError("min_occurrence must be at least 1");
  std::vector<int> hits(n, 0);
  for (const auto& log : result.per_epoch_log)
    for (const auto& s : log.suspicious)
      for (std::size_t i : s.members) ++hits.at(i);
  result.poisoned.clear();
  result.benign.clear();
  for (std::size_t i = 0; i < n; ++i) (hits[i] >= min_occurrence ? result.poisoned : result.benign).push_back(i);
}

SegregationResult segregate(Model& model, const LabeledDataset& data, const TrainConfig& train,
                            OptimizerState& state, const ClusterConfig& cluster,
                            const SegregateOptions& options) {
  if (options.ep_detect < 0) throw ConfigError("EP_detect must be non-negative");
  if (data.size() == 0) throw EmptyInputError("segregation needs a non-empty dataset");
  cluster.validate();
  SegregationResult result;
  for (int e = 0; e < options.ep_detect; ++e) {
    const EpochStats stats = train_epoch(model, data, train, state);
    const FeatureMatrix z = extract_features(model, data);
    TsneConfig tc = cluster.tsne;
    tc.seed = cluster.tsne.seed + static_cast<std::uint64_t>(e);
    TsneResult emb = tsne_embed(z, tc);
    ClusterAssignment a;
    EpochLog log = analyze_embedding(emb.embedding, data.labels, data.num_classes, cluster.eps, cluster.min_pts, &a);
    log.epoch = e + 1;
    log.train = stats;
    log.tsne_kl = emb.kl.empty() ? 0.0 : emb.kl.back().second;
    result.per_epoch_log.push_back(std::move(log));
    if (options.keep_embeddings)
      result.embeddings.push_back(EpochEmbedding{e + 1, std::move(emb.embedding), std::move(a)});
  }
  aggregate_epochs(result, data.size(), options.min_occurrence);
  return result;
}

SegregationResult recluster(const std::vector<EpochEmbedding>& embeddings, std::span<const int> labels,
                            int num_classes, double eps, int min_pts, int min_occurrence) {
  SegregationResult result;
  for (const auto& e : embeddings) {
    ClusterAssignment a;
    EpochLog log = analyze_embedding(e.points, labels, num_classes, eps, min_pts, &a);
    log.epoch = e.epoch;
    result.per_epoch_log.push_back(std::move(log));
    result.embeddings.push_back(EpochEmbedding{e.epoch, e.points, std::move(a)});
  }
  aggregate_epochs(result, labels.size(), min_occurrence);
  return result;
}

}  // namespace csc
