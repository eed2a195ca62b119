#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "csc/data.hpp"
#include "csc/nn.hpp"

namespace csc {

// Fraction of samples whose argmax over all model outputs equals the
// label. A prediction of an extra (confusion) class is always wrong.
double accuracy(const Model& model, const LabeledDataset& test);

// Accuracy with the argmax restricted to the first `num_classes` outputs.
double accuracy_restricted(const Model& model, const LabeledDataset& test, int num_classes);

// Fraction of triggered samples predicted exactly as `target`.
double attack_success_rate(const Model& model, const LabeledDataset& triggered, int target);

double accuracy(std::span<const int> predicted, std::span<const int> labels);
double attack_success_rate(std::span<const int> predicted, int target);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t true_positives = 0;
  std::size_t flagged = 0;
  std::size_t actual = 0;
};

// precision = TP / flagged and recall = TP / actual, with these
// conventions for empty sets: nothing flagged and nothing poisoned gives
// (1, 1); nothing flagged with poison present gives (0, 0); no poison
// gives recall 1 and precision 0 if anything was flagged.
PrecisionRecall detection_precision_recall(std::span<const std::uint8_t> flagged,
                                           std::span<const std::uint8_t> truth);

}  // namespace csc
