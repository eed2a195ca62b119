#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csc/data.hpp"

namespace csc {

enum class DataSource { synthetic, idx, container };
enum class AttackKind { none, patch, blend, signal };
enum class PostSegregationTraining { full, benign };

struct ExperimentConfig {
  std::string name = "run";
  std::uint64_t seed = 1;

  // data
  DataSource source = DataSource::synthetic;
  std::filesystem::path data_dir = "data";
  std::string train_images = "train-images-idx3-ubyte";
  std::string train_labels = "train-labels-idx1-ubyte";
  std::string test_images = "t10k-images-idx3-ubyte";
  std::string test_labels = "t10k-labels-idx1-ubyte";
  std::string train_container;  // for source = container
  std::string test_container;
  int train_subset = 10000;     // 0 keeps the whole idx training set
  int test_subset = 0;
  int num_classes = 10;
  int image_size = 16;
  int channels = 1;
  int train_per_class = 500;
  int test_per_class = 300;
  SyntheticOptions synthetic{.ambiguous_fraction = 0.1};

  // model and training
  int conv1_channels = 8;
  int conv2_channels = 16;
  int feature_dim = 64;
  int epochs = 30;
  int batch_size = 64;
  double learning_rate = 0.01;
  double momentum = 0.9;
  PostSegregationTraining post_segregation = PostSegregationTraining::full;

  // attack
  AttackKind attack = AttackKind::patch;
  int target_label = 0;
  double poison_rate = 0.10;
  std::optional<PoisonMode> poison_mode;  // unset: clean for signal, dirty otherwise
  int patch_size = 3;
  double patch_fill = 1.0;
  double blend_alpha = 0.2;
  double signal_amplitude = 0.08;
  double signal_frequency = 6.0;

  // segregation
  int ep_detect = 10;
  double eps = 3.0;
  int min_pts = 30;
  int min_occurrence = 1;
  double perplexity = 30.0;
  int tsne_iterations = 500;

  // concealment
  int conceal_epochs = 10;
  bool conceal_class_weighted = false;

  // baselines
  bool run_baselines = true;
  double assumed_poison_rate = 0;  // 0 means "use poison_rate" for SS
  int ac_proj_dims = 10;
  int unlearn_epochs = 5;
  double unlearn_lr = 5e-4;
  bool reference_clean_model = true;

  // output
  std::filesystem::path out_dir = "runs";
  bool dump_embeddings = false;
  bool svg = false;
  bool save_models = false;

  PoisonMode effective_mode() const;
  double effective_assumed_rate() const;
  // Throws ConfigError on an inconsistent configuration. With
  // check_files, a missing data file raises DataError.
  void validate(bool check_files = true) const;

  // Flat key/value view of every field, in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const;
  void set(const std::string& key, const std::string& value);
};

inline constexpr const char* kConfigHeader = "csc-config v1";

// Format: first non-blank line is the header "csc-config v1"; then one
// `key = value` per line; `#` starts a comment. Unknown keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string format_config(const ExperimentConfig& cfg);

std::string to_string(AttackKind kind);
AttackKind parse_attack_kind(const std::string& name);

}  // namespace csc
