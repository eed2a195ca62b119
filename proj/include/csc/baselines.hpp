#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "csc/data.hpp"
#include "csc/matrix.hpp"
#include "csc/nn.hpp"

namespace csc {

struct DetectionMask {
  std::string method;
  std::vector<std::uint8_t> flagged;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return flagged.size(); }
  std::vector<std::size_t> indices() const;
};

// ---------------------------------------------------------------- k-means

struct KMeansResult {
  std::vector<int> assignment;
  MatrixD centroids;                  // k x d
  std::vector<double> objective;      // within-cluster SSE after each assignment step
  int iterations = 0;
};

// k-means++ seeding, then Lloyd iterations until the assignment stops
// changing or max_iters is reached. Throws ConfigError when k > rows.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters = 100);

// ---------------------------------------------------------------- detectors

// Squared projections of the centered rows onto the top right-singular
// vector, found by power iteration in double precision.
std::vector<double> spectral_scores(const Matrix& features);

DetectionMask spectral_signature_detect(const FeatureMatrix& features, std::span<const int> labels,
                                        int num_classes, double removal_fraction);
DetectionMask spectral_signature_detect(const Model& model, const LabeledDataset& data, double removal_fraction);

struct ActivationClusterOptions {
  int proj_dims = 10;
  std::uint64_t seed = 0;
  int max_iters = 100;
};

DetectionMask activation_cluster_detect(const FeatureMatrix& features, std::span<const int> labels,
                                        int num_classes, const ActivationClusterOptions& options = {});
DetectionMask activation_cluster_detect(const Model& model, const LabeledDataset& data,
                                        const ActivationClusterOptions& options = {});

// ---------------------------------------------------------------- unlearning

struct UnlearnOptions {
  int epochs = 5;
  float learning_rate = 5e-4f;
  float momentum = 0.9f;
  int batch_size = 64;
  std::uint64_t seed = 0;
  // Batches whose loss already exceeds this are treated as saturated and
  // contribute no further ascent.
  double loss_clamp = 1e4;
};

struct UnlearnResult {
  Model model;
  std::vector<double> epoch_loss;  // mean batch loss seen in each epoch
};

// Gradient ascent on the cross-entropy of `subset`, updating every layer.
UnlearnResult unlearn(const Model& model, const LabeledDataset& subset, const UnlearnOptions& options = {});

}  // namespace csc
