#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csc/config.hpp"
#include "csc/errors.hpp"
#include "csc/experiment.hpp"
#include "csc/segregation.hpp"
#include "csc/simd.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string data_dir;
  std::vector<std::string> overrides;
  bool quiet = false;
};

csc::ExperimentConfig load(const Common& c) {
  csc::ExperimentConfig cfg = c.config.empty() ? csc::ExperimentConfig{} : csc::load_config(c.config);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw csc::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
  if (!c.data_dir.empty()) cfg.data_dir = c.data_dir;
  return cfg;
}

csc::ProgressFn progress(const Common& c) {
  if (c.quiet) return {};
  return [](const std::string& s) { std::cerr << "csc: " << s << "\n"; };
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw csc::ConfigError("bad sweep value '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void print_summary(const csc::Report& r) {
  std::printf("%s  seed=%llu attack=%s poisoned=%llu\n", r.name.c_str(), static_cast<unsigned long long>(r.seed),
              r.poison.attack.c_str(), static_cast<unsigned long long>(r.poison.poisoned));
  if (r.reference) std::printf("  reference   acc=%.4f asr=%.4f\n", r.reference->acc, r.reference->asr);
  std::printf("  undefended  acc=%.4f asr=%.4f\n", r.undefended.acc, r.undefended.asr);
  std::printf("  csc         acc=%.4f acc_restricted=%.4f asr=%.4f precision=%.4f recall=%.4f segregated=%llu\n",
              r.acc_clean, r.acc_restricted, r.asr, r.detection_precision, r.detection_recall,
              static_cast<unsigned long long>(r.segregated));
  if (r.spectral_signature)
    std::printf("  ss          precision=%.4f recall=%.4f\n", r.spectral_signature->precision,
                r.spectral_signature->recall);
  if (r.activation_clustering)
    std::printf("  ac          precision=%.4f recall=%.4f\n", r.activation_clustering->precision,
                r.activation_clustering->recall);
  if (r.unlearning) std::printf("  unlearning  acc=%.4f asr=%.4f\n", r.unlearning->acc, r.unlearning->asr);
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Config file (csc-config v1)");
  sub->add_option("--seed", c.seed, "Master seed");
  sub->add_option("--out-dir", c.out_dir, "Output directory");
  sub->add_option("--data-dir", c.data_dir, "Dataset directory");
  sub->add_option("--set", c.overrides, "Override a config key (key=value), repeatable");
  sub->add_flag("-q,--quiet", c.quiet, "No progress output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backdoor segregation and concealment experiments"};
  app.require_subcommand(1);
  Common common;

  auto* run = app.add_subcommand("run", "Run one experiment and write its report");
  add_common(run, common);
  bool dump = false, svg = false;
  run->add_flag("--dump-embeddings", dump, "Write per-epoch embeddings");
  run->add_flag("--svg", svg, "Also write one SVG scatter per epoch");

  auto* sweep = app.add_subcommand("sweep", "Run one experiment per value of an axis");
  add_common(sweep, common);
  std::string axis, values;
  sweep->add_option("--axis", axis, "gamma, eps or min_pts")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();

  auto* attack = app.add_subcommand("attack", "Build and export a poisoned dataset");
  add_common(attack, common);
  std::string kind, out_file;
  attack->add_option("--kind", kind, "patch, blend or signal")->required();
  attack->add_option("--out", out_file, "Output container (default <out-dir>/<name>.<kind>.train.csc)");

  auto* dumpcmd = app.add_subcommand("dump-embeddings", "Run segregation and write per-epoch embeddings");
  add_common(dumpcmd, common);
  bool dump_svg = false;
  dumpcmd->add_flag("--svg", dump_svg, "Also write one SVG scatter per epoch");

  auto* show = app.add_subcommand("config", "Print the effective configuration");
  add_common(show, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      auto cfg = load(common);
      cfg.dump_embeddings = cfg.dump_embeddings || dump || svg;
      cfg.svg = cfg.svg || svg;
      if (!common.quiet) std::cerr << "csc: kernels " << csc::simd::active().name << "\n";
      print_summary(csc::run_experiment(cfg, progress(common)));
    } else if (*sweep) {
      const auto cfg = load(common);
      const auto ax = csc::parse_sweep_axis(axis);
      for (const auto& r : csc::run_sweep(cfg, ax, parse_values(values), progress(common))) print_summary(r);
    } else if (*attack) {
      auto cfg = load(common);
      cfg.attack = csc::parse_attack_kind(kind);
      if (cfg.attack == csc::AttackKind::none) throw csc::ConfigError("attack needs a trigger kind");
      cfg.validate();
      const auto data = csc::prepare_data(cfg);
      std::filesystem::path path = out_file;
      if (path.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        path = cfg.out_dir / (cfg.name + "." + csc::to_string(cfg.attack) + ".train.csc");
      }
      csc::save_dataset(data.train, path);
      auto test_path = path;
      test_path.replace_extension();
      test_path += ".triggered.csc";
      csc::save_dataset(data.triggered, test_path);
      std::printf("train %zu samples, %zu eligible, %zu poisoned -> %s\n", data.train.size(), data.eligible,
                  data.train.poisoned_indices().size(), path.string().c_str());
      std::printf("triggered test %zu samples -> %s\n", data.triggered.size(), test_path.string().c_str());
    } else if (*dumpcmd) {
      auto cfg = load(common);
      cfg.validate();
      const auto data = csc::prepare_data(cfg);
      auto model = csc::make_model(csc::make_architecture(cfg, data.train), csc::derive_seed(cfg, csc::SeedStream::model_init));
      auto state = csc::make_optimizer_state(model);
      csc::SegregateOptions so;
      so.ep_detect = cfg.ep_detect;
      so.min_occurrence = cfg.min_occurrence;
      so.keep_embeddings = true;
      const auto pf = progress(common);
      if (pf) pf("segregation: " + std::to_string(cfg.ep_detect) + " epochs");
      const auto seg = csc::segregate(model, data.train, csc::make_train_config(cfg), state,
                                      csc::make_cluster_config(cfg), so);
      std::filesystem::create_directories(cfg.out_dir);
      const auto paths = csc::run_paths(cfg);
      csc::write_embeddings_csv(paths.embeddings, seg, data.train.labels);
      if (dump_svg || cfg.svg) {
        for (std::size_t k = 0; k < seg.embeddings.size(); ++k) {
          std::vector<std::uint8_t> susp(data.train.size(), 0);
          for (const auto& s : seg.per_epoch_log[k].suspicious)
            for (std::size_t i : s.members) susp[i] = 1;
          char suffix[32];
          std::snprintf(suffix, sizeof suffix, ".epoch%02d.svg", seg.embeddings[k].epoch);
          csc::write_embedding_svg(cfg.out_dir / (cfg.name + suffix), seg.embeddings[k], data.train.labels, susp,
                                   data.train.num_classes);
        }
      }
      std::printf("%zu epochs, %zu segregated -> %s\n", seg.embeddings.size(), seg.poisoned.size(),
                  paths.embeddings.string().c_str());
    } else if (*show) {
      std::cout << csc::format_config(load(common));
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "csc: error: " << e.what() << "\n";
    return csc::exit_code_for(e);
  }
}
