#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "csc/baselines.hpp"
#include "csc/config.hpp"
#include "csc/data.hpp"
#include "csc/nn.hpp"
#include "csc/report.hpp"
#include "csc/segregation.hpp"

namespace csc {

// Seeds derived from ExperimentConfig::seed, one stream per consumer.
enum class SeedStream : std::uint64_t {
  train_data = 1,
  test_data,
  poison,
  trigger_pattern,
  model_init,
  shuffle,
  tsne,
  head,
  kmeans,
  unlearn,
  subset,
};
std::uint64_t derive_seed(const ExperimentConfig& cfg, SeedStream stream);

struct ExperimentData {
  LabeledDataset train_clean;
  LabeledDataset train;      // poisoned (equal to train_clean without an attack)
  LabeledDataset test;
  LabeledDataset triggered;  // non-target test samples with the trigger
  TriggerSpec trigger = TriggerSpec::default_signal();
  std::size_t eligible = 0;
  int target = 0;
};

// Without an attack the trigger is still built (patch by default) so that
// ASR can be measured against it.
TriggerSpec make_trigger(const ExperimentConfig& cfg, const ImageShape& shape);
ExperimentData prepare_data(const ExperimentConfig& cfg);

Architecture make_architecture(const ExperimentConfig& cfg, const LabeledDataset& data);
TrainConfig make_train_config(const ExperimentConfig& cfg);
ClusterConfig make_cluster_config(const ExperimentConfig& cfg);

// Where the outputs of one run go, relative to cfg.out_dir.
struct RunPaths {
  std::filesystem::path report, masks, index, embeddings, undefended_model, concealed_model;
};
RunPaths run_paths(const ExperimentConfig& cfg);

struct RunArtifacts {
  Report report;
  SegregationResult segregation;
  std::optional<DetectionMask> spectral_signature;
  std::optional<DetectionMask> activation_clustering;
  Model undefended;
  Model concealed;
};

// Variations of the clustering settings evaluated on one shared training
// trajectory. Training never depends on the clustering outcome when the
// post-segregation phase uses the full dataset, so each variant matches a
// separate run with that setting.
struct ClusterVariant {
  double eps;
  int min_pts;
};

using ProgressFn = std::function<void(const std::string&)>;

// Full pipeline without touching the filesystem.
std::vector<RunArtifacts> run_pipeline(const ExperimentConfig& cfg, const ExperimentData& data,
                                       const std::vector<ClusterVariant>& variants, const ProgressFn& progress = {});
RunArtifacts run_pipeline(const ExperimentConfig& cfg, const ExperimentData& data, const ProgressFn& progress = {});

// Runs the pipeline and writes <name>.json, <name>.masks.csv and a row of
// index.csv under cfg.out_dir (plus embeddings and models on request).
// Stage failures are rethrown as StageError.
Report run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

enum class SweepAxis { gamma, eps, min_pts };
SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis axis);

// One report per value, also written to sweep_<axis>.csv under out_dir.
std::vector<Report> run_sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<double>& values,
                              const ProgressFn& progress = {});

// Appends one row to a CSV file under an exclusive lock, writing the header
// first when the file is empty.
void append_csv_locked(const std::filesystem::path& path, const std::vector<std::string>& header,
                       const std::vector<std::string>& row);

// CSV rows (epoch, sample_index, x, y, cluster_id, label, is_suspicious).
void write_embeddings_csv(const std::filesystem::path& path, const SegregationResult& seg,
                          const std::vector<int>& labels);
void write_embedding_svg(const std::filesystem::path& path, const EpochEmbedding& emb,
                         const std::vector<int>& labels, const std::vector<std::uint8_t>& suspicious,
                         int num_classes);

// Exit code for an exception escaping the pipeline: 2 config, 3 data,
// 4 anything else.
int exit_code_for(const std::exception& e);

}  // namespace csc
