#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "csc/data.hpp"
#include "csc/dbscan.hpp"
#include "csc/nn.hpp"
#include "csc/tsne.hpp"

namespace csc {

struct ClusterConfig {
  double eps = 3.0;
  int min_pts = 30;
  TsneConfig tsne;

  void validate() const;
};

// Ids of clusters whose members carry exactly one label or all N labels and
// which are strictly smaller than the largest cluster. Every cluster tied
// for the largest size is exempt, and noise is never returned.
std::vector<int> identify_suspicious(const ClusterAssignment& assignment, std::span<const int> labels,
                                     int num_classes);

struct SuspiciousCluster {
  int cluster_id = 0;
  std::vector<int> labels;  // distinct labels, ascending
  std::vector<std::size_t> members;

  std::size_t size() const { return members.size(); }
};

struct EpochLog {
  int epoch = 0;  // 1-based
  EpochStats train;
  int num_clusters = 0;
  std::size_t noise_points = 0;
  std::size_t largest_cluster = 0;
  double tsne_kl = 0.0;
  std::vector<SuspiciousCluster> suspicious;
};

struct EpochEmbedding {
  int epoch = 0;
  Matrix points;  // n x 2
  ClusterAssignment assignment;
};

struct SegregationResult {
  std::vector<std::size_t> poisoned;  // D_sp, ascending
  std::vector<std::size_t> benign;    // D_sb, ascending
  std::vector<EpochLog> per_epoch_log;
  std::vector<EpochEmbedding> embeddings;  // only filled on request

  std::vector<std::uint8_t> mask(std::size_t n) const;
};

// Cluster one epoch's embedding and record its suspicious clusters.
EpochLog analyze_embedding(const Matrix& points, std::span<const int> labels, int num_classes,
                           double eps, int min_pts, ClusterAssignment* assignment_out = nullptr);

// Samples that fell in a suspicious cluster in at least `min_occurrence`
// epochs form D_sp; the rest form D_sb.
void aggregate_epochs(SegregationResult& result, std::size_t n, int min_occurrence);

struct SegregateOptions {
  int ep_detect = 10;
  int min_occurrence = 1;
  bool keep_embeddings = false;
};

// Trains `model` for ep_detect epochs, clustering the penultimate features
// after each. The epoch-e embedding uses t-SNE seed cluster.tsne.seed + e.
// The model and optimizer state are left where training stopped.
SegregationResult segregate(Model& model, const LabeledDataset& data, const TrainConfig& train,
                            OptimizerState& state, const ClusterConfig& cluster,
                            const SegregateOptions& options);

// Re-runs clustering and aggregation on stored embeddings with different
// DBSCAN settings, without retraining.
SegregationResult recluster(const std::vector<EpochEmbedding>& embeddings, std::span<const int> labels,
                            int num_classes, double eps, int min_pts, int min_occurrence);

}  // namespace csc
