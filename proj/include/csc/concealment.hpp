#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csc/checkpoint.hpp"
#include "csc/data.hpp"
#include "csc/nn.hpp"

namespace csc {

enum class Provenance : std::uint8_t { from_benign = 0, from_relabeled_poison = 1 };

// Training set for concealment: the original samples with every segregated
// poison relabeled to the extra class N, and num_classes = N + 1.
struct AugmentedDataset {
  LabeledDataset data;
  std::vector<Provenance> provenance;
  int confusion_class = 0;

  // Throws ConsistencyError when a tag and a label disagree.
  void validate() const;
};

AugmentedDataset relabel_to_virtual(const LabeledDataset& data, std::span<const std::size_t> poisoned,
                                    int num_classes);

struct ConcealOptions {
  int epochs = 10;  // E_c
  // Inverse class frequency weights on the cross-entropy.
  bool class_weighted = false;
  std::uint64_t head_seed = 0;
};

// Fresh (N + 1)-output head trained for options.epochs on the augmented set
// while the extractor stays frozen. The returned model keeps
// freeze_extractor set.
Model conceal(const Model& model, const AugmentedDataset& augmented, const TrainConfig& train,
              const ConcealOptions& options);

// 64-bit FNV-1a over the sorted poisoned indices, as hex.
std::string segregation_hash(std::span<const std::size_t> poisoned);

CheckpointMetadata concealment_metadata(const AugmentedDataset& augmented, const ConcealOptions& options,
                                        std::span<const std::size_t> poisoned);

}  // namespace csc
