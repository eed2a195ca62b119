#include "csc/metrics.hpp"

#include "csc/errors.hpp"

namespace csc {

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  if (predicted.empty()) throw EmptyInputError("accuracy of an empty set");
  if (predicted.size() != labels.size()) throw ConsistencyError("prediction and label counts differ");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hit += predicted[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(predicted.size());
}

double attack_success_rate(std::span<const int> predicted, int target) {
  if (predicted.empty()) throw EmptyInputError("attack success rate of an empty set");
  std::size_t hit = 0;
  for (int p : predicted) hit += p == target;
  return static_cast<double>(hit) / static_cast<double>(predicted.size());
}

double accuracy(const Model& model, const LabeledDataset& test) {
  if (test.empty()) throw EmptyInputError("accuracy of an empty set");
  return accuracy(predict(model, test), test.labels);
}

double accuracy_restricted(const Model& model, const LabeledDataset& test, int num_classes) {
  if (test.empty()) throw EmptyInputError("accuracy of an empty set");
  if (num_classes < 1 || num_classes > model.num_outputs()) throw ConfigError("restricted class count out of range");
  const Matrix logits = head_logits(model, extract_features(model, test));
  std::vector<int> pred(test.size());
  for (std::size_t i = 0; i < test.size(); ++i)
    pred[i] = argmax(logits.row(i).first(static_cast<std::size_t>(num_classes)));
  return accuracy(pred, test.labels);
}

double attack_success_rate(const Model& model, const LabeledDataset& triggered, int target) {
  if (triggered.empty()) throw EmptyInputError("attack success rate of an empty set");
  return attack_success_rate(predict(model, triggered), target);
}

PrecisionRecall detection_precision_recall(std::span<const std::uint8_t> flagged,
                                           std::span<const std::uint8_t> truth) {
  if (flagged.size() != truth.size()) throw ConsistencyError("mask lengths differ");
  PrecisionRecall r;
  for (std::size_t i = 0; i < flagged.size(); ++i) {
    const bool f = flagged[i] != 0, t = truth[i] != 0;
    r.flagged += f;
    r.actual += t;
    r.true_positives += f && t;
  }
  if (r.actual == 0) {
    r.recall = 1.0;
    r.precision = r.flagged == 0 ? 1.0 : 0.0;
  } else {
    r.recall = static_cast<double>(r.true_positives) / static_cast<double>(r.actual);
    r.precision = r.flagged == 0 ? 0.0 : static_cast<double>(r.true_positives) / static_cast<double>(r.flagged);
  }
  return r;
}

}  // namespace csc
