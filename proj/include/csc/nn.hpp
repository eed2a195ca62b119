#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "csc/data.hpp"
#include "csc/matrix.hpp"

namespace csc {

// conv3x3(same) -> ReLU -> maxpool2 -> conv3x3(same) -> ReLU -> maxpool2
//   -> dense(feature_dim) -> ReLU   [feature extractor]
//   -> dense(num_outputs)           [classification head]
struct Architecture {
  ImageShape input;
  int conv1_channels = 8;
  int conv2_channels = 16;
  int feature_dim = 64;
  int num_outputs = 10;

  int pooled1_h() const { return input.height / 2; }
  int pooled1_w() const { return input.width / 2; }
  int pooled2_h() const { return pooled1_h() / 2; }
  int pooled2_w() const { return pooled1_w() / 2; }
  std::size_t flat_dim() const {
    return static_cast<std::size_t>(pooled2_h()) * pooled2_w() * conv2_channels;
  }
  void validate() const;
  bool operator==(const Architecture&) const = default;
};

// Weights are stored [fan_in x fan_out] so a batch forward is X * W.
// Conv weights use im2col rows ordered (ky, kx, channel).
template <class T>
struct Parameters {
  std::vector<T> conv1_w, conv1_b;
  std::vector<T> conv2_w, conv2_b;
  std::vector<T> fc_w, fc_b;
  std::vector<T> head_w, head_b;

  static constexpr std::size_t kTensorCount = 8;
  static constexpr std::size_t kExtractorTensors = 6;

  // Tensors in declaration order; the first kExtractorTensors belong to the
  // feature extractor.
  std::vector<std::vector<T>*> tensors() {
    return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b, &head_w, &head_b};
  }
  std::vector<const std::vector<T>*> tensors() const {
    return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b, &head_w, &head_b};
  }

  static Parameters zeros_like(const Architecture& arch);
  bool operator==(const Parameters&) const = default;
};

extern template struct Parameters<float>;
extern template struct Parameters<double>;

struct Model {
  Architecture arch;
  Parameters<float> params;
  bool freeze_extractor = false;
  std::uint64_t rng_seed = 0;

  int feature_dim() const { return arch.feature_dim; }
  int num_outputs() const { return arch.num_outputs; }
};

Model make_model(const Architecture& arch, std::uint64_t seed);

// Byte-level snapshot of the extractor tensors, for freeze checks.
std::vector<float> extractor_snapshot(const Model& model);

struct ForwardOutput {
  FeatureMatrix features;  // batch x feature_dim
  Matrix logits;           // batch x num_outputs
};

// images holds `batch` HWC images matching model.arch.input.
ForwardOutput forward(const Model& model, std::span<const float> images, std::size_t batch);

// Head applied to precomputed penultimate features.
Matrix head_logits(const Model& model, const FeatureMatrix& features);

struct LossResult {
  double loss = 0.0;   // mean cross-entropy over the batch
  Matrix grad_logits;  // d(loss)/d(logits)
};

// Softmax cross-entropy. Optional per-class weights scale each sample's
// term; the result is still divided by the batch size.
LossResult ce_loss(const Matrix& logits, std::span<const int> labels,
                   std::span<const float> class_weights = {});

Matrix softmax(const Matrix& logits);

// Mean loss and parameter gradients for one batch, in precision T. The
// float instantiation runs the SIMD kernels; double runs plain loops and
// exists for verification. Extractor gradients are skipped (left zero)
// when `head_only` is set.
template <class T>
double loss_and_gradients(const Architecture& arch, const Parameters<T>& params,
                          std::span<const T> images, std::span<const int> labels,
                          Parameters<T>& grads, bool head_only = false);

template <class T>
Parameters<T> convert_parameters(const Parameters<float>& p);

// ---------------------------------------------------------------- training

struct TrainConfig {
  int epochs = 30;
  int batch_size = 64;
  float learning_rate = 0.01f;
  float momentum = 0.9f;
  // (epoch, multiplier) pairs; a multiplier applies from its epoch onward
  // and multipliers compound.
  std::vector<std::pair<int, float>> lr_decay_schedule;
  std::uint64_t seed = 0;

  // SGD momentum 0.9, lr 0.01, x0.1 at 50% and 75% of the epochs.
  static TrainConfig standard(int epochs, std::uint64_t seed);
  float learning_rate_at(int epoch) const;
  void validate() const;
};

struct OptimizerState {
  Parameters<float> velocity;
  int epochs_done = 0;
};

OptimizerState make_optimizer_state(const Model& model);

// Momentum SGD: v = momentum * v + g; p -= lr * v. Extractor tensors are
// left untouched when model.freeze_extractor is set.
void sgd_step(Model& model, const Parameters<float>& gradients, float learning_rate, float momentum,
              OptimizerState& state);
void sgd_step(Model& model, const Parameters<float>& gradients, const TrainConfig& cfg,
              OptimizerState& state);

struct EpochStats {
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

// One shuffled pass over the dataset. The shuffle depends on cfg.seed and
// state.epochs_done, so the pass is reproducible.
EpochStats train_epoch(Model& model, const LabeledDataset& data, const TrainConfig& cfg,
                       OptimizerState& state);

// Head-only epoch over cached features; the extractor is not consulted.
// Equivalent to train_epoch with a frozen extractor because the features
// do not change while it is frozen.
EpochStats train_head_epoch(Model& model, const FeatureMatrix& features, std::span<const int> labels,
                            const TrainConfig& cfg, OptimizerState& state,
                            std::span<const float> class_weights = {});

FeatureMatrix extract_features(const Model& model, const LabeledDataset& data);

// Fresh seeded head with new_num_outputs outputs; the extractor is copied.
Model replace_head(const Model& model, int new_num_outputs, std::uint64_t seed);

// Argmax over the logits; ties go to the lowest class index.
int argmax(std::span<const float> row);
std::vector<int> predict(const Model& model, std::span<const float> images, std::size_t batch);
std::vector<int> predict(const Model& model, const LabeledDataset& data);

}  // namespace csc
