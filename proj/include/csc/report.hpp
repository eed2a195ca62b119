#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace csc {

struct ModelMetrics {
  double acc = 0.0;
  double acc_restricted = 0.0;
  double asr = 0.0;
  bool operator==(const ModelMetrics&) const = default;
};

struct DetectionMetrics {
  double precision = 0.0;
  double recall = 0.0;
  std::uint64_t flagged = 0;
  std::uint64_t true_positives = 0;
  bool operator==(const DetectionMetrics&) const = default;
};

struct PoisonSummary {
  std::string attack = "none";
  std::string mode = "dirty";
  int target_label = 0;
  double rate = 0.0;  // of the eligible subset
  std::uint64_t train_size = 0;
  std::uint64_t eligible = 0;
  std::uint64_t poisoned = 0;
  double rate_of_total = 0.0;
  std::uint64_t triggered_test_size = 0;
  bool operator==(const PoisonSummary&) const = default;
};

struct EpochSummary {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double tsne_kl = 0.0;
  int clusters = 0;
  std::uint64_t noise = 0;
  std::uint64_t largest_cluster = 0;
  std::uint64_t suspicious_clusters = 0;
  std::uint64_t suspicious_points = 0;
  std::uint64_t suspicious_poisoned = 0;
  bool operator==(const EpochSummary&) const = default;
};

struct Report {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;

  // Full CSC pipeline.
  double acc_clean = 0.0;
  double acc_restricted = 0.0;
  double asr = 0.0;
  double detection_precision = 0.0;
  double detection_recall = 0.0;
  std::uint64_t segregated = 0;

  PoisonSummary poison;
  std::optional<ModelMetrics> reference;  // trained without poison
  ModelMetrics undefended;
  std::optional<DetectionMetrics> spectral_signature;
  std::optional<DetectionMetrics> activation_clustering;
  std::optional<ModelMetrics> unlearning;
  std::vector<EpochSummary> segregation;

  std::map<std::string, double> timing_seconds;

  bool operator==(const Report&) const = default;
};

// Pretty-printed JSON. Timing fields are left out when include_timing is
// false so reports of identical runs compare byte for byte.
std::string report_to_json(const Report& report, bool include_timing = true);
Report report_from_json(const std::string& text);

std::vector<std::string> report_csv_header();
std::vector<std::string> report_csv_row(const Report& report);

}  // namespace csc
