#include "csc/report.hpp"

#include <charconv>

#include <json.hpp>

#include "csc/errors.hpp"

namespace csc {

using nlohmann::ordered_json;

void to_json(ordered_json& j, const ModelMetrics& m) {
  j = ordered_json{{"acc", m.acc}, {"acc_restricted", m.acc_restricted}, {"asr", m.asr}};
}
void from_json(const ordered_json& j, ModelMetrics& m) {
  j.at("acc").get_to(m.acc);
  j.at("acc_restricted").get_to(m.acc_restricted);
  j.at("asr").get_to(m.asr);
}

void to_json(ordered_json& j, const DetectionMetrics& m) {
  j = ordered_json{{"precision", m.precision}, {"recall", m.recall}, {"flagged", m.flagged},
                   {"true_positives", m.true_positives}};
}
void from_json(const ordered_json& j, DetectionMetrics& m) {
  j.at("precision").get_to(m.precision);
  j.at("recall").get_to(m.recall);
  j.at("flagged").get_to(m.flagged);
  j.at("true_positives").get_to(m.true_positives);
}

void to_json(ordered_json& j, const PoisonSummary& p) {
  j = ordered_json{{"attack", p.attack},       {"mode", p.mode},
                   {"target_label", p.target_label}, {"rate", p.rate},
                   {"train_size", p.train_size}, {"eligible", p.eligible},
                   {"poisoned", p.poisoned},     {"rate_of_total", p.rate_of_total},
                   {"triggered_test_size", p.triggered_test_size}};
}
void from_json(const ordered_json& j, PoisonSummary& p) {
  j.at("attack").get_to(p.attack);
  j.at("mode").get_to(p.mode);
  j.at("target_label").get_to(p.target_label);
  j.at("rate").get_to(p.rate);
  j.at("train_size").get_to(p.train_size);
  j.at("eligible").get_to(p.eligible);
  j.at("poisoned").get_to(p.poisoned);
  j.at("rate_of_total").get_to(p.rate_of_total);
  j.at("triggered_test_size").get_to(p.triggered_test_size);
}

void to_json(ordered_json& j, const EpochSummary& e) {
  j = ordered_json{{"epoch", e.epoch},
                   {"train_loss", e.train_loss},
                   {"train_accuracy", e.train_accuracy},
                   {"tsne_kl", e.tsne_kl},
                   {"clusters", e.clusters},
                   {"noise", e.noise},
                   {"largest_cluster", e.largest_cluster},
                   {"suspicious_clusters", e.suspicious_clusters},
                   {"suspicious_points", e.suspicious_points},
                   {"suspicious_poisoned", e.suspicious_poisoned}};
}
void from_json(const ordered_json& j, EpochSummary& e) {
  j.at("epoch").get_to(e.epoch);
  j.at("train_loss").get_to(e.train_loss);
  j.at("train_accuracy").get_to(e.train_accuracy);
  j.at("tsne_kl").get_to(e.tsne_kl);
  j.at("clusters").get_to(e.clusters);
  j.at("noise").get_to(e.noise);
  j.at("largest_cluster").get_to(e.largest_cluster);
  j.at("suspicious_clusters").get_to(e.suspicious_clusters);
  j.at("suspicious_points").get_to(e.suspicious_points);
  j.at("suspicious_poisoned").get_to(e.suspicious_poisoned);
}

std::string report_to_json(const Report& r, bool include_timing) {
  ordered_json j;
  j["name"] = r.name;
  j["seed"] = r.seed;
  j["acc_clean"] = r.acc_clean;
  j["acc_restricted"] = r.acc_restricted;
  j["asr"] = r.asr;
  j["detection_precision"] = r.detection_precision;
  j["detection_recall"] = r.detection_recall;
  j["segregated"] = r.segregated;
  j["poison"] = r.poison;
  j["reference"] = r.reference ? ordered_json(*r.reference) : ordered_json(nullptr);
  j["undefended"] = r.undefended;
  j["spectral_signature"] = r.spectral_signature ? ordered_json(*r.spectral_signature) : ordered_json(nullptr);
  j["activation_clustering"] =
      r.activation_clustering ? ordered_json(*r.activation_clustering) : ordered_json(nullptr);
  j["unlearning"] = r.unlearning ? ordered_json(*r.unlearning) : ordered_json(nullptr);
  j["segregation"] = r.segregation;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : r.config) cfg[k] = v;
  j["config"] = cfg;
  if (include_timing) j["timing_seconds"] = r.timing_seconds;
  return j.dump(2) + "\n";
}

Report report_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report is not valid JSON: ") + e.what());
  }
  try {
    Report r;
    j.at("name").get_to(r.name);
    j.at("seed").get_to(r.seed);
    j.at("acc_clean").get_to(r.acc_clean);
    j.at("acc_restricted").get_to(r.acc_restricted);
    j.at("asr").get_to(r.asr);
    j.at("detection_precision").get_to(r.detection_precision);
    j.at("detection_recall").get_to(r.detection_recall);
    j.at("segregated").get_to(r.segregated);
    j.at("poison").get_to(r.poison);
    if (!j.at("reference").is_null()) r.reference = j["reference"].get<ModelMetrics>();
    j.at("undefended").get_to(r.undefended);
    if (!j.at("spectral_signature").is_null()) r.spectral_signature = j["spectral_signature"].get<DetectionMetrics>();
    if (!j.at("activation_clustering").is_null())
      r.activation_clustering = j["activation_clustering"].get<DetectionMetrics>();
    if (!j.at("unlearning").is_null()) r.unlearning = j["unlearning"].get<ModelMetrics>();
    j.at("segregation").get_to(r.segregation);
    for (const auto& [k, v] : j.at("config").items()) r.config.emplace_back(k, v.get<std::string>());
    if (j.contains("timing_seconds")) j["timing_seconds"].get_to(r.timing_seconds);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

namespace {

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::string config_value(const Report& r, const std::string& key) {
  for (const auto& [k, v] : r.config)
    if (k == key) return v;
  return "";
}

}  // namespace

std::vector<std::string> report_csv_header() {
  return {"name",          "seed",          "attack",        "mode",          "poison_rate",
          "poisoned",      "eps",           "min_pts",       "ep_detect",     "epochs",
          "reference_acc", "undefended_acc", "undefended_asr", "acc_clean",    "acc_restricted",
          "asr",           "precision",     "recall",        "segregated",    "ss_precision",
          "ss_recall",     "ac_precision",  "ac_recall",     "unlearn_acc",   "unlearn_asr"};
}

std::vector<std::string> report_csv_row(const Report& r) {
  auto opt = [](const auto& o, auto f) { return o ? num(f(*o)) : std::string(); };
  return {r.name,
          std::to_string(r.seed),
          r.poison.attack,
          r.poison.mode,
          num(r.poison.rate),
          std::to_string(r.poison.poisoned),
          config_value(r, "eps"),
          config_value(r, "min_pts"),
          config_value(r, "ep_detect"),
          config_value(r, "epochs"),
          opt(r.reference, [](const ModelMetrics& m) { return m.acc; }),
          num(r.undefended.acc),
          num(r.undefended.asr),
          num(r.acc_clean),
          num(r.acc_restricted),
          num(r.asr),
          num(r.detection_precision),
          num(r.detection_recall),
          std::to_string(r.segregated),
          opt(r.spectral_signature, [](const DetectionMetrics& m) { return m.precision; }),
          opt(r.spectral_signature, [](const DetectionMetrics& m) { return m.recall; }),
          opt(r.activation_clustering, [](const DetectionMetrics& m) { return m.precision; }),
          opt(r.activation_clustering, [](const DetectionMetrics& m) { return m.recall; }),
          opt(r.unlearning, [](const ModelMetrics& m) { return m.acc; }),
          opt(r.unlearning, [](const ModelMetrics& m) { return m.asr; })};
}

}  // namespace csc
