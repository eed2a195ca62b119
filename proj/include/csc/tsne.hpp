#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "csc/matrix.hpp"

namespace csc {

struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 500;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch_iteration = 250;
  // <= 0 selects max(50, n / 12).
  double learning_rate = 0.0;
  double init_sigma = 1e-4;
  // Inputs wider than this are PCA-reduced first.
  int pca_dims = 50;
  std::uint64_t seed = 0;
  // Iterations (1-based, counted after the update) at which to record the
  // KL divergence. The final iteration is always recorded.
  std::vector<int> kl_checkpoints;
};

struct TsneResult {
  Matrix embedding;                           // n x 2
  std::vector<std::pair<int, double>> kl;     // (iteration, KL(P || Q))
};

// Exact t-SNE: O(n^2) per iteration, dense symmetric affinities.
// Throws ConfigError when n < 3 * perplexity and DataError on non-finite
// input.
TsneResult tsne_embed(const Matrix& features, const TsneConfig& cfg);

// Symmetrized joint probabilities P = (P_j|i + P_i|j) / 2n from squared
// Euclidean distances, each conditional calibrated to the perplexity by
// bisection on the Gaussian precision. Returned dense, row-major, n x n.
std::vector<float> joint_probabilities(const Matrix& x, double perplexity);

// KL(P || Q) for a 2-D embedding under the Student-t kernel, in double.
double tsne_kl_divergence(const std::vector<float>& p, const Matrix& embedding);

}  // namespace csc
