#include "csc/concealment.hpp"

#include <algorithm>
#include <cstdio>

#include "csc/errors.hpp"

namespace csc {

void AugmentedDataset::validate() const {
  data.validate();
  if (provenance.size() != data.size()) throw ConsistencyError("provenance tags do not match the dataset");
  if (data.num_classes != confusion_class + 1) throw ConsistencyError("confusion class must be the last class");
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool relabeled = provenance[i] == Provenance::from_relabeled_poison;
    if (relabeled != (data.labels[i] == confusion_class))
      throw ConsistencyError("sample " + std::to_string(i) + " has a label that contradicts its provenance");
  }
}

AugmentedDataset relabel_to_virtual(const LabeledDataset& data, std::span<const std::size_t> poisoned,
                                    int num_classes) {
  if (num_classes < 1) throw ConfigError("class count must be positive");
  AugmentedDataset out;
  out.data = data;
  out.data.num_classes = num_classes + 1;
  out.confusion_class = num_classes;
  out.provenance.assign(data.size(), Provenance::from_benign);
  for (std::size_t i : poisoned) {
    if (i >= data.size()) throw IndexError("poisoned index " + std::to_string(i) + " is out of range");
    out.data.labels[i] = num_classes;
    out.provenance[i] = Provenance::from_relabeled_poison;
  }
  return out;
}

Model conceal(const Model& model, const AugmentedDataset& augmented, const TrainConfig& train,
              const ConcealOptions& options) {
  if (options.epochs < 1) throw ConfigError("concealment needs at least one epoch");
  if (augmented.data.empty()) throw EmptyInputError("concealment needs a non-empty dataset");
  Model out = replace_head(model, augmented.data.num_classes, options.head_seed);
  out.freeze_extractor = true;

  // The extractor is frozen, so its features can be computed once.
  const FeatureMatrix z = extract_features(out, augmented.data);
  std::vector<float> weights;
  if (options.class_weighted) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(augmented.data.num_classes), 0);
    for (int y : augmented.data.labels) ++counts[static_cast<std::size_t>(y)];
    const double m = static_cast<double>(augmented.data.size());
    const double k = static_cast<double>(counts.size());
    weights.resize(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c)
      weights[c] = counts[c] ? static_cast<float>(m / (k * static_cast<double>(counts[c]))) : 0.0f;
  }
  TrainConfig cfg = train;
  cfg.epochs = options.epochs;
  OptimizerState state = make_optimizer_state(out);
  for (int e = 0; e < options.epochs; ++e) train_head_epoch(out, z, augmented.data.labels, cfg, state, weights);
  return out;
}

std::string segregation_hash(std::span<const std::size_t> poisoned) {
  std::vector<std::size_t> sorted(poisoned.begin(), poisoned.end());
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i : sorted) {
    auto v = static_cast<std::uint64_t>(i);
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CheckpointMetadata concealment_metadata(const AugmentedDataset& augmented, const ConcealOptions& options,
                                        std::span<const std::size_t> poisoned) {
  return {
      {"num_classes", std::to_string(augmented.confusion_class)},
      {"confusion_class", std::to_string(augmented.confusion_class)},
      {"conceal_epochs", std::to_string(options.epochs)},
      {"segregated_count", std::to_string(poisoned.size())},
      {"segregation_hash", segregation_hash(poisoned)},
  };
}

}  // namespace csc
