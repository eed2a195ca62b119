#pragma once

// Randomized property sweeps shared by the unit tests and the acceptance
// report. Each returns enough detail to print a one-line verdict.

#include <cstddef>
#include <cstdint>
#include <string>

namespace props {

struct Sweep {
  std::size_t instances = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // largest observed error, where meaningful
  std::string note;

  bool ok() const { return failures == 0; }
};

// dbscan versus the brute-force oracle on random 2-D instances (n <= 200).
Sweep dbscan_vs_oracle(std::size_t instances, std::uint64_t seed);

// KL at the final iteration (500) must not exceed KL at iteration 260.
Sweep tsne_kl_post_exaggeration(std::size_t instances, std::uint64_t seed);

// Lloyd objective never increases.
Sweep kmeans_monotone(std::size_t instances, std::uint64_t seed);

// Power-iteration scores against the full-SVD oracle, relative error 1e-6.
Sweep spectral_vs_svd(std::size_t instances, std::uint64_t seed);

// Analytic versus central-difference gradients, relative error 1e-4.
Sweep gradient_check(std::size_t instances, std::uint64_t seed);

// |ce(uniform logits) - ln N| and |sum softmax - 1| over random inputs, 1e-6.
Sweep cross_entropy_uniform(std::size_t instances, std::uint64_t seed);
Sweep softmax_normalized(std::size_t instances, std::uint64_t seed);

}  // namespace props
