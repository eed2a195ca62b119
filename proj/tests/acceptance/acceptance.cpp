// Desk-scale acceptance report: one PASS/FAIL line per criterion.
// Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csc/experiment.hpp"
#include "properties.hpp"

using namespace csc;

namespace {

constexpr std::uint64_t kSeeds[] = {1, 2, 3};
const char* const kAttacks[] = {"patch", "blend", "signal"};
constexpr int kMinPts[] = {10, 30, 50, 70};
constexpr double kGammas[] = {0.01, 0.05, 0.10};

struct Run {
  std::string attack;
  std::uint64_t seed = 0;
  Report report;
  bool extractor_frozen = false;
  bool partition_ok = false;
  bool count_ok = false;
};

struct Verdict {
  int id;
  bool pass;
  std::string what;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

ExperimentConfig desk_config(const std::string& attack, std::uint64_t seed, const std::filesystem::path& work) {
  auto cfg = load_config(std::filesystem::path(CSC_SOURCE_DIR) / "configs" / ("desk_" + attack + ".cfg"));
  cfg.seed = seed;
  cfg.name = cfg.name + "_s" + std::to_string(seed);
  cfg.out_dir = work;
  return cfg;
}

bool partition_ok(const SegregationResult& s, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (std::size_t i : s.poisoned) {
    if (i >= n) return false;
    ++seen[i];
  }
  for (std::size_t i : s.benign) {
    if (i >= n) return false;
    ++seen[i];
  }
  return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }) &&
         std::is_sorted(s.poisoned.begin(), s.poisoned.end()) && std::is_sorted(s.benign.begin(), s.benign.end());
}

Run finish(const std::string& attack, const ExperimentConfig& cfg, const ExperimentData& data, RunArtifacts& art,
           const std::filesystem::path& work) {
  Run r;
  r.attack = attack;
  r.seed = cfg.seed;
  r.report = art.report;
  r.extractor_frozen = extractor_snapshot(art.concealed) == extractor_snapshot(art.undefended);
  r.partition_ok = partition_ok(art.segregation, data.train.size());
  const auto expected = static_cast<std::uint64_t>(std::llround(cfg.poison_rate * static_cast<double>(data.eligible)));
  r.count_ok = art.report.poison.poisoned == expected &&
               eligible_indices(data.train_clean, cfg.target_label, cfg.effective_mode()).size() == data.eligible;
  std::ofstream(work / (art.report.name + ".json")) << report_to_json(art.report);
  return r;
}

void print_run(const Run& r) {
  const auto& p = r.report;
  std::printf(
      "  %-18s ref_acc=%.4f undef_acc=%.4f undef_asr=%.4f | csc acc=%.4f asr=%.4f prec=%.4f rec=%.4f | "
      "ss_prec=%.4f ac_prec=%.4f | unlearn acc=%.4f asr=%.4f\n",
      p.name.c_str(), p.reference ? p.reference->acc : NAN, p.undefended.acc, p.undefended.asr, p.acc_clean, p.asr,
      p.detection_precision, p.detection_recall, p.spectral_signature ? p.spectral_signature->precision : NAN,
      p.activation_clustering ? p.activation_clustering->precision : NAN, p.unlearning ? p.unlearning->acc : NAN,
      p.unlearning ? p.unlearning->asr : NAN);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"csc acceptance"};
  std::string work_dir = "acceptance_runs";
  bool properties_only = false;
  app.add_option("--work-dir", work_dir, "Where run reports are written");
  app.add_flag("--properties-only", properties_only, "Only evaluate the numeric property suite");
  CLI11_PARSE(app, argc, argv);
  const std::filesystem::path work(work_dir);
  std::filesystem::create_directories(work);
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<Verdict> verdicts;

  // ------------------------------------------------------------ property suite (8)
  {
    struct Item {
      std::string name;
      props::Sweep s;
    };
    std::vector<Item> items;
    items.push_back({"gradient check", props::gradient_check(6, 100)});
    items.push_back({"ce uniform = ln N", props::cross_entropy_uniform(1000, 101)});
    items.push_back({"softmax sums to 1", props::softmax_normalized(1000, 102)});
    items.push_back({"dbscan vs oracle", props::dbscan_vs_oracle(500, 103)});
    items.push_back({"k-means monotone", props::kmeans_monotone(200, 104)});
    items.push_back({"SS vs SVD", props::spectral_vs_svd(100, 105)});
    items.push_back({"t-SNE KL post-exaggeration", props::tsne_kl_post_exaggeration(20, 106)});
    bool ok = true;
    std::string detail;
    for (const auto& it : items) {
      ok = ok && it.s.ok();
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s%s %zu/%zu (worst %.2e)", detail.empty() ? "" : "; ", it.name.c_str(),
                    it.s.instances - it.s.failures, it.s.instances, it.s.worst);
      detail += buf;
    }
    verdicts.push_back({8, ok, "numeric property suite", detail});
  }

  if (properties_only) {
    for (const auto& v : verdicts)
      std::printf("criterion %d: %s  %s | %s\n", v.id, v.pass ? "PASS" : "FAIL", v.what.c_str(), v.detail.c_str());
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; }) ? 0 : 1;
  }

  // ------------------------------------------------------------ desk runs
  std::printf("desk runs (work dir %s)\n", work.string().c_str());
  std::vector<Run> runs;
  std::map<int, Report> min_pts_reports;
  for (const char* attack : kAttacks)
    for (std::uint64_t seed : kSeeds) {
      const auto cfg = desk_config(attack, seed, work);
      const auto data = prepare_data(cfg);
      std::vector<ClusterVariant> variants{{cfg.eps, cfg.min_pts}};
      const bool sweep_here = std::string(attack) == "patch" && seed == 1;
      if (sweep_here)
        for (int m : kMinPts)
          if (m != cfg.min_pts) variants.push_back({cfg.eps, m});
      auto arts = run_pipeline(cfg, data, variants);
      runs.push_back(finish(attack, cfg, data, arts[0], work));
      print_run(runs.back());
      if (sweep_here)
        for (std::size_t k = 0; k < variants.size(); ++k) min_pts_reports[variants[k].min_pts] = arts[k].report;
    }

  std::map<double, Report> gamma_reports;
  for (double g : kGammas) {
    if (g == 0.10) {
      gamma_reports[g] = runs.front().report;
      continue;
    }
    auto cfg = desk_config("patch", 1, work);
    cfg.poison_rate = g;
    cfg.name += "_gamma" + fmt("%.2f", g);
    const auto data = prepare_data(cfg);
    auto art = run_pipeline(cfg, data);
    const Run r = finish("patch", cfg, data, art, work);
    print_run(r);
    gamma_reports[g] = r.report;
    runs.push_back(r);
  }

  // Determinism: repeat one desk run from scratch and compare its report.
  bool deterministic = false;
  {
    const auto cfg = desk_config("signal", 1, work);
    const auto again = run_pipeline(cfg, prepare_data(cfg));
    const auto& first = std::find_if(runs.begin(), runs.end(), [](const Run& r) {
                          return r.attack == "signal" && r.seed == 1;
                        })->report;
    deterministic = report_to_json(again.report, false) == report_to_json(first, false);
  }

  auto each = [&](const std::function<bool(const Run&)>& pick, const std::function<bool(const Run&)>& ok,
                  std::string& detail) {
    bool all = true;
    for (const auto& r : runs) {
      if (!pick(r)) continue;
      const bool v = ok(r);
      all = all && v;
      if (!v) detail += (detail.empty() ? "failing: " : ", ") + r.report.name;
    }
    return all;
  };
  auto desk = [](const Run& r) { return r.report.poison.rate == 0.10; };

  // 1
  {
    std::string d;
    double min_asr = 1, max_gap = 0;
    const bool ok = each([&](const Run& r) { return desk(r) && r.attack == "patch"; },
                         [&](const Run& r) {
                           const double gap = std::abs(r.report.undefended.acc - r.report.reference->acc);
                           min_asr = std::min(min_asr, r.report.undefended.asr);
                           max_gap = std::max(max_gap, gap);
                           return r.report.undefended.asr >= 0.95 && gap <= 0.02;
                         },
                         d);
    verdicts.push_back({1, ok, "undefended patch ASR >= 0.95, ACC within 2 points of no-attack model (3 seeds)",
                        "min ASR " + fmt("%.4f", min_asr) + ", max ACC gap " + fmt("%.4f", max_gap) +
                            (d.empty() ? "" : "; " + d)});
  }
  // 2
  {
    std::string d;
    double max_asr = 0, max_drop = -1;
    const bool ok = each(desk,
                         [&](const Run& r) {
                           const double drop = r.report.undefended.acc - r.report.acc_clean;
                           max_asr = std::max(max_asr, r.report.asr);
                           max_drop = std::max(max_drop, drop);
                           return r.report.asr <= 0.05 && drop <= 0.02;
                         },
                         d);
    verdicts.push_back({2, ok, "CSC ASR <= 0.05 and ACC drop <= 2 points (patch, blend, signal x 3 seeds)",
                        "max ASR " + fmt("%.4f", max_asr) + ", max drop " + fmt("%.4f", max_drop) +
                            (d.empty() ? "" : "; " + d)});
  }
  // 3
  {
    std::string d;
    double min_p = 1, min_r = 1;
    const bool ok = each(desk,
                         [&](const Run& r) {
                           const bool clean = r.attack == "signal";
                           min_p = std::min(min_p, r.report.detection_precision);
                           min_r = std::min(min_r, r.report.detection_recall);
                           return r.report.detection_precision >= (clean ? 0.90 : 0.95) &&
                                  r.report.detection_recall >= (clean ? 0.85 : 0.90);
                         },
                         d);
    verdicts.push_back({3, ok, "segregation precision/recall >= 0.95/0.90 (patch, blend), >= 0.90/0.85 (signal)",
                        "min precision " + fmt("%.4f", min_p) + ", min recall " + fmt("%.4f", min_r) +
                            (d.empty() ? "" : "; " + d)});
  }
  // 4
  {
    std::string d;
    double min_margin = 1;
    const bool ok = each(desk,
                         [&](const Run& r) {
                           const double base = std::max(r.report.spectral_signature->precision,
                                                        r.report.activation_clustering->precision);
                           min_margin = std::min(min_margin, r.report.detection_precision - base);
                           return r.report.detection_precision > base;
                         },
                         d);
    verdicts.push_back({4, ok, "CSC precision > SS and AC precision on every desk run",
                        "min margin " + fmt("%.4f", min_margin) + (d.empty() ? "" : "; " + d)});
  }
  // 5
  {
    std::string d;
    double min_gap = 1, max_asr = 0;
    const bool ok = each([&](const Run& r) { return desk(r) && r.attack == "signal"; },
                         [&](const Run& r) {
                           if (!r.report.unlearning) return false;
                           const double gap = r.report.acc_clean - r.report.unlearning->acc;
                           min_gap = std::min(min_gap, gap);
                           max_asr = std::max({max_asr, r.report.asr, r.report.unlearning->asr});
                           return gap >= 0.05 && r.report.asr <= 0.05 && r.report.unlearning->asr <= 0.05;
                         },
                         d);
    verdicts.push_back({5, ok, "clean-label: conceal ACC >= unlearn ACC + 5 points, both ASR <= 0.05",
                        "min ACC gap " + fmt("%.4f", min_gap) + ", max ASR " + fmt("%.4f", max_asr) +
                            (d.empty() ? "" : "; " + d)});
  }
  // 6
  {
    bool ok = true;
    std::string d;
    for (const auto& [g, r] : gamma_reports) {
      ok = ok && r.asr <= 0.05;
      d += (d.empty() ? "" : ", ") + std::string("gamma ") + fmt("%.2f", g) + " ASR " + fmt("%.4f", r.asr);
    }
    verdicts.push_back({6, ok, "CSC ASR <= 0.05 at gamma 0.01, 0.05, 0.10 (patch)", d});
  }
  // 7
  {
    double pmin = 1, pmax = 0, rmin = 1, rmax = 0;
    std::string d;
    for (const auto& [m, r] : min_pts_reports) {
      pmin = std::min(pmin, r.detection_precision), pmax = std::max(pmax, r.detection_precision);
      rmin = std::min(rmin, r.detection_recall), rmax = std::max(rmax, r.detection_recall);
      d += (d.empty() ? "" : ", ") + std::string("min_pts ") + std::to_string(m) + " " +
           fmt("%.4f", r.detection_precision) + "/" + fmt("%.4f", r.detection_recall);
    }
    const bool ok = min_pts_reports.size() == 4 && pmax - pmin <= 0.10 && rmax - rmin <= 0.10;
    verdicts.push_back({7, ok, "precision and recall vary by <= 0.10 over min_pts 10..70",
                        "spread " + fmt("%.4f", pmax - pmin) + "/" + fmt("%.4f", rmax - rmin) + "; " + d});
  }
  // 9
  {
    std::size_t frozen = 0, part = 0, counts = 0;
    for (const auto& r : runs) frozen += r.extractor_frozen, part += r.partition_ok, counts += r.count_ok;
    const bool ok = frozen == runs.size() && part == runs.size() && counts == runs.size() && deterministic;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "extractor unchanged %zu/%zu, partition %zu/%zu, poison count %zu/%zu, repeat run identical: %s",
                  frozen, runs.size(), part, runs.size(), counts, runs.size(), deterministic ? "yes" : "no");
    verdicts.push_back({9, ok, "structural invariants", buf});
  }

  std::sort(verdicts.begin(), verdicts.end(), [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
  std::printf("\n");
  for (const auto& v : verdicts)
    std::printf("criterion %d: %s  %s | %s\n", v.id, v.pass ? "PASS" : "FAIL", v.what.c_str(), v.detail.c_str());
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  const auto passed = std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
  std::printf("%zd/%zu criteria passed in %.1f min\n", static_cast<std::ptrdiff_t>(passed), verdicts.size(), minutes);
  return passed == static_cast<std::ptrdiff_t>(verdicts.size()) ? 0 : 1;
}
