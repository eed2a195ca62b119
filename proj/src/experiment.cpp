#include "csc/experiment.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "csc/checkpoint.hpp"
#include "csc/concealment.hpp"
#include "csc/errors.hpp"
#include "csc/metrics.hpp"
#include "csc/random.hpp"

namespace csc {
namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), exit_code_for(e));
  }
}

ModelMetrics evaluate(const Model& model, const ExperimentData& data) {
  ModelMetrics m;
  m.acc = accuracy(model, data.test);
  m.acc_restricted = accuracy_restricted(model, data.test, data.test.num_classes);
  m.asr = data.triggered.empty() ? 0.0 : attack_success_rate(model, data.triggered, data.target);
  return m;
}

DetectionMetrics to_metrics(const PrecisionRecall& pr) {
  return {pr.precision, pr.recall, pr.flagged, pr.true_positives};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_field(fields[i]);
  }
  return line + "\n";
}

std::string fmt_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->exit_code();
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  return 4;
}

std::uint64_t derive_seed(const ExperimentConfig& cfg, SeedStream stream) {
  return mix_seed(cfg.seed, static_cast<std::uint64_t>(stream));
}

TriggerSpec make_trigger(const ExperimentConfig& cfg, const ImageShape& shape) {
  switch (cfg.attack) {
    case AttackKind::blend: {
      auto pattern = TriggerSpec::default_blend(shape, derive_seed(cfg, SeedStream::trigger_pattern));
      return TriggerSpec::blend(pattern.as_blend()->pattern, static_cast<float>(cfg.blend_alpha));
    }
    case AttackKind::signal:
      return TriggerSpec::signal(static_cast<float>(cfg.signal_amplitude), static_cast<float>(cfg.signal_frequency));
    case AttackKind::none:
    case AttackKind::patch:
      break;
  }
  const int s = cfg.patch_size;
  return TriggerSpec::patch(shape.height - s, shape.width - s, s, s, static_cast<float>(cfg.patch_fill));
}

ExperimentData prepare_data(const ExperimentConfig& cfg) {
  ExperimentData d;
  switch (cfg.source) {
    case DataSource::synthetic: {
      const ImageShape shape{cfg.image_size, cfg.image_size, cfg.channels};
      d.train_clean = make_synthetic(cfg.train_per_class, cfg.num_classes, shape,
                                     derive_seed(cfg, SeedStream::train_data), cfg.synthetic);
      d.test = make_synthetic(cfg.test_per_class, cfg.num_classes, shape, derive_seed(cfg, SeedStream::test_data),
                              cfg.synthetic);
      break;
    }
    case DataSource::idx: {
      d.train_clean = load_idx(cfg.data_dir / cfg.train_images, cfg.data_dir / cfg.train_labels);
      d.test = load_idx(cfg.data_dir / cfg.test_images, cfg.data_dir / cfg.test_labels);
      d.test.num_classes = d.train_clean.num_classes = std::max(d.train_clean.num_classes, d.test.num_classes);
      auto shrink = [&](LabeledDataset& ds, int keep, SeedStream stream) {
        if (keep <= 0 || static_cast<std::size_t>(keep) >= ds.size()) return;
        Rng rng(derive_seed(cfg, stream));
        auto perm = random_permutation(ds.size(), rng);
        perm.resize(static_cast<std::size_t>(keep));
        std::sort(perm.begin(), perm.end());
        const int n = ds.num_classes;
        ds = ds.subset(perm);
        ds.num_classes = n;
      };
      shrink(d.train_clean, cfg.train_subset, SeedStream::subset);
      shrink(d.test, cfg.test_subset, SeedStream::test_data);
      break;
    }
    case DataSource::container:
      d.train_clean = load_dataset(cfg.data_dir / cfg.train_container);
      d.test = load_dataset(cfg.data_dir / cfg.test_container);
      break;
  }
  if (d.train_clean.shape != d.test.shape) throw ConsistencyError("train and test images differ in shape");
  if (cfg.target_label >= d.train_clean.num_classes) throw ConfigError("target_label exceeds the class count");

  d.target = cfg.target_label;
  d.trigger = make_trigger(cfg, d.train_clean.shape);
  if (cfg.attack == AttackKind::none) {
    d.train = d.train_clean;
  } else {
    PoisonSpec spec{d.trigger, cfg.target_label, cfg.poison_rate, cfg.effective_mode(),
                    derive_seed(cfg, SeedStream::poison)};
    d.eligible = eligible_indices(d.train_clean, cfg.target_label, spec.mode).size();
    d.train = poison_dataset(d.train_clean, spec);
  }
  d.triggered = build_triggered_testset(d.test, d.trigger, cfg.target_label);
  return d;
}

Architecture make_architecture(const ExperimentConfig& cfg, const LabeledDataset& data) {
  Architecture a;
  a.input = data.shape;
  a.conv1_channels = cfg.conv1_channels;
  a.conv2_channels = cfg.conv2_channels;
  a.feature_dim = cfg.feature_dim;
  a.num_outputs = data.num_classes;
  a.validate();
  return a;
}

TrainConfig make_train_config(const ExperimentConfig& cfg) {
  TrainConfig t = TrainConfig::standard(cfg.epochs, derive_seed(cfg, SeedStream::shuffle));
  t.batch_size = cfg.batch_size;
  t.learning_rate = static_cast<float>(cfg.learning_rate);
  t.momentum = static_cast<float>(cfg.momentum);
  return t;
}

ClusterConfig make_cluster_config(const ExperimentConfig& cfg) {
  ClusterConfig c;
  c.eps = cfg.eps;
  c.min_pts = cfg.min_pts;
  c.tsne.perplexity = cfg.perplexity;
  c.tsne.iterations = cfg.tsne_iterations;
  c.tsne.exaggeration_iterations = std::min(250, cfg.tsne_iterations);
  c.tsne.momentum_switch_iteration = std::min(250, cfg.tsne_iterations);
  c.tsne.seed = derive_seed(cfg, SeedStream::tsne);
  return c;
}

RunPaths run_paths(const ExperimentConfig& cfg) {
  RunPaths p;
  p.report = cfg.out_dir / (cfg.name + ".json");
  p.masks = cfg.out_dir / (cfg.name + ".masks.csv");
  p.index = cfg.out_dir / "index.csv";
  p.embeddings = cfg.out_dir / (cfg.name + ".embeddings.csv");
  p.undefended_model = cfg.out_dir / (cfg.name + ".undefended.csc");
  p.concealed_model = cfg.out_dir / (cfg.name + ".concealed.csc");
  return p;
}

std::vector<RunArtifacts> run_pipeline(const ExperimentConfig& cfg, const ExperimentData& data,
                                       const std::vector<ClusterVariant>& variants, const ProgressFn& progress) {
  auto say = [&](const std::string& s) {
    if (progress) progress(s);
  };
  if (variants.empty()) throw ConfigError("no clustering variant requested");
  const bool shared = variants.size() > 1 || variants[0].eps != cfg.eps || variants[0].min_pts != cfg.min_pts;
  if (shared && cfg.post_segregation != PostSegregationTraining::full)
    throw ConfigError("clustering variants need post_segregation = full");

  const int N = data.train.num_classes;
  const Architecture arch = make_architecture(cfg, data.train);
  const TrainConfig tc = make_train_config(cfg);
  const ClusterConfig cc = make_cluster_config(cfg);
  std::map<std::string, double> timing;

  std::optional<ModelMetrics> reference;
  if (cfg.reference_clean_model && cfg.attack != AttackKind::none) {
    Stopwatch sw;
    reference = stage("reference", [&] {
      say("training reference model on clean data");
      Model r = make_model(arch, derive_seed(cfg, SeedStream::model_init));
      OptimizerState st = make_optimizer_state(r);
      for (int e = 0; e < cfg.epochs; ++e) train_epoch(r, data.train_clean, tc, st);
      return evaluate(r, data);
    });
    timing["reference"] = sw.seconds();
  }

  Model model = make_model(arch, derive_seed(cfg, SeedStream::model_init));
  OptimizerState state = make_optimizer_state(model);
  SegregationResult seg;
  {
    Stopwatch sw;
    seg = stage("segregation", [&] {
      say("segregation: " + std::to_string(cfg.ep_detect) + " epochs");
      SegregateOptions so;
      so.ep_detect = cfg.ep_detect;
      so.min_occurrence = cfg.min_occurrence;
      so.keep_embeddings = shared || cfg.dump_embeddings;
      return segregate(model, data.train, tc, state, cc, so);
    });
    timing["segregation"] = sw.seconds();
  }

  Model undefended;
  {
    Stopwatch sw;
    stage("training", [&] {
      say("training to epoch " + std::to_string(cfg.epochs));
      if (cfg.post_segregation == PostSegregationTraining::full) {
        for (int e = cfg.ep_detect; e < cfg.epochs; ++e) train_epoch(model, data.train, tc, state);
        undefended = model;
      } else {
        const LabeledDataset benign = data.train.subset(seg.benign);
        for (int e = cfg.ep_detect; e < cfg.epochs; ++e) train_epoch(model, benign, tc, state);
        undefended = make_model(arch, derive_seed(cfg, SeedStream::model_init));
        OptimizerState st = make_optimizer_state(undefended);
        for (int e = 0; e < cfg.epochs; ++e) train_epoch(undefended, data.train, tc, st);
      }
      return 0;
    });
    timing["training"] = sw.seconds();
  }
  const ModelMetrics undefended_metrics = stage("evaluation", [&] { return evaluate(undefended, data); });
  if (cfg.attack == AttackKind::none && cfg.reference_clean_model) reference = undefended_metrics;

  std::optional<DetectionMask> ss, ac;
  if (cfg.run_baselines) {
    Stopwatch sw;
    stage("baselines", [&] {
      say("spectral signature and activation clustering");
      const FeatureMatrix z = extract_features(undefended, data.train);
      ss = spectral_signature_detect(z, data.train.labels, N, 1.5 * cfg.effective_assumed_rate());
      ActivationClusterOptions ao;
      ao.proj_dims = cfg.ac_proj_dims;
      ao.seed = derive_seed(cfg, SeedStream::kmeans);
      ac = activation_cluster_detect(z, data.train.labels, N, ao);
      return 0;
    });
    timing["baselines"] = sw.seconds();
  }

  std::vector<RunArtifacts> out;
  for (const auto& v : variants) {
    RunArtifacts art;
    ExperimentConfig vcfg = cfg;
    vcfg.eps = v.eps;
    vcfg.min_pts = v.min_pts;
    art.segregation = (v.eps == cfg.eps && v.min_pts == cfg.min_pts)
                          ? seg
                          : stage("segregation", [&] {
                              return recluster(seg.embeddings, data.train.labels, N, v.eps, v.min_pts,
                                               cfg.min_occurrence);
                            });
    if (!cfg.dump_embeddings) art.segregation.embeddings.clear();
    Report& r = art.report;
    r.name = vcfg.name;
    r.seed = vcfg.seed;
    r.config = vcfg.entries();
    r.timing_seconds = timing;
    r.poison.attack = to_string(cfg.attack);
    r.poison.mode = cfg.effective_mode() == PoisonMode::dirty ? "dirty" : "clean";
    r.poison.target_label = cfg.target_label;
    r.poison.rate = cfg.attack == AttackKind::none ? 0.0 : cfg.poison_rate;
    r.poison.train_size = data.train.size();
    r.poison.eligible = data.eligible;
    r.poison.poisoned = data.train.poisoned_indices().size();
    r.poison.rate_of_total = static_cast<double>(r.poison.poisoned) / static_cast<double>(data.train.size());
    r.poison.triggered_test_size = data.triggered.size();
    r.reference = reference;
    r.undefended = undefended_metrics;

    const auto seg_mask = art.segregation.mask(data.train.size());
    const auto pr = detection_precision_recall(seg_mask, data.train.poison_mask);
    r.detection_precision = pr.precision;
    r.detection_recall = pr.recall;
    r.segregated = art.segregation.poisoned.size();
    for (const auto& log : art.segregation.per_epoch_log) {
      EpochSummary e;
      e.epoch = log.epoch;
      e.train_loss = log.train.mean_loss;
      e.train_accuracy = log.train.accuracy;
      e.tsne_kl = log.tsne_kl;
      e.clusters = log.num_clusters;
      e.noise = log.noise_points;
      e.largest_cluster = log.largest_cluster;
      e.suspicious_clusters = log.suspicious.size();
      for (const auto& s : log.suspicious) {
        e.suspicious_points += s.size();
        for (std::size_t i : s.members) e.suspicious_poisoned += data.train.poison_mask[i];
      }
      r.segregation.push_back(e);
    }
    // recluster() leaves training statistics empty; take them from the run.
    for (std::size_t i = 0; i < r.segregation.size() && i < seg.per_epoch_log.size(); ++i) {
      r.segregation[i].train_loss = seg.per_epoch_log[i].train.mean_loss;
      r.segregation[i].train_accuracy = seg.per_epoch_log[i].train.accuracy;
      r.segregation[i].tsne_kl = seg.per_epoch_log[i].tsne_kl;
    }

    {
      Stopwatch sw;
      art.concealed = stage("concealment", [&] {
        say("concealment: " + std::to_string(cfg.conceal_epochs) + " head epochs, " +
            std::to_string(art.segregation.poisoned.size()) + " relabeled");
        const AugmentedDataset aug = relabel_to_virtual(data.train, art.segregation.poisoned, N);
        TrainConfig ctc = TrainConfig::standard(cfg.conceal_epochs, derive_seed(cfg, SeedStream::shuffle));
        ctc.batch_size = cfg.batch_size;
        ctc.learning_rate = static_cast<float>(cfg.learning_rate);
        ctc.momentum = static_cast<float>(cfg.momentum);
        ConcealOptions co;
        co.epochs = cfg.conceal_epochs;
        co.class_weighted = cfg.conceal_class_weighted;
        co.head_seed = derive_seed(cfg, SeedStream::head);
        return conceal(undefended, aug, ctc, co);
      });
      const ModelMetrics m = stage("evaluation", [&] { return evaluate(art.concealed, data); });
      r.acc_clean = m.acc;
      r.acc_restricted = m.acc_restricted;
      r.asr = m.asr;
      r.timing_seconds["concealment"] = sw.seconds();
    }

    if (ss) {
      r.spectral_signature = to_metrics(detection_precision_recall(ss->flagged, data.train.poison_mask));
      r.activation_clustering = to_metrics(detection_precision_recall(ac->flagged, data.train.poison_mask));
      art.spectral_signature = ss;
      art.activation_clustering = ac;
      if (!art.segregation.poisoned.empty() && cfg.unlearn_epochs > 0) {
        Stopwatch sw;
        r.unlearning = stage("unlearning", [&] {
          say("unlearning on " + std::to_string(art.segregation.poisoned.size()) + " samples");
          UnlearnOptions uo;
          uo.epochs = cfg.unlearn_epochs;
          uo.learning_rate = static_cast<float>(cfg.unlearn_lr);
          uo.momentum = static_cast<float>(cfg.momentum);
          uo.batch_size = cfg.batch_size;
          uo.seed = derive_seed(cfg, SeedStream::unlearn);
          const auto res = unlearn(undefended, data.train.subset(art.segregation.poisoned), uo);
          return evaluate(res.model, data);
        });
        r.timing_seconds["unlearning"] = sw.seconds();
      }
    }
    art.undefended = undefended;
    out.push_back(std::move(art));
  }
  return out;
}

RunArtifacts run_pipeline(const ExperimentConfig& cfg, const ExperimentData& data, const ProgressFn& progress) {
  auto v = run_pipeline(cfg, data, {ClusterVariant{cfg.eps, cfg.min_pts}}, progress);
  return std::move(v.front());
}

namespace {

void write_outputs(const ExperimentConfig& cfg, const ExperimentData& data, const RunArtifacts& art) {
  stage("output", [&] {
    std::filesystem::create_directories(cfg.out_dir);
    const RunPaths p = run_paths(cfg);
    write_text(p.report, report_to_json(art.report));

    std::string masks = "index,label,poisoned,csc,ss,ac\n";
    const auto seg = art.segregation.mask(data.train.size());
    for (std::size_t i = 0; i < data.train.size(); ++i) {
      masks += std::to_string(i) + ',' + std::to_string(data.train.labels[i]) + ',' +
               std::to_string(data.train.poison_mask[i]) + ',' + std::to_string(seg[i]) + ',' +
               (art.spectral_signature ? std::to_string(art.spectral_signature->flagged[i]) : "") + ',' +
               (art.activation_clustering ? std::to_string(art.activation_clustering->flagged[i]) : "") + '\n';
    }
    write_text(p.masks, masks);
    append_csv_locked(p.index, report_csv_header(), report_csv_row(art.report));

    if (cfg.dump_embeddings) {
      write_embeddings_csv(p.embeddings, art.segregation, data.train.labels);
      if (cfg.svg) {
        for (std::size_t k = 0; k < art.segregation.embeddings.size(); ++k) {
          const auto& emb = art.segregation.embeddings[k];
          std::vector<std::uint8_t> susp(data.train.size(), 0);
          for (const auto& s : art.segregation.per_epoch_log[k].suspicious)
            for (std::size_t i : s.members) susp[i] = 1;
          char suffix[32];
          std::snprintf(suffix, sizeof suffix, ".epoch%02d.svg", emb.epoch);
          write_embedding_svg(cfg.out_dir / (cfg.name + suffix), emb, data.train.labels, susp,
                              data.train.num_classes);
        }
      }
    }
    if (cfg.save_models) {
      save_model(art.undefended, p.undefended_model, {{"role", "undefended"}});
      const AugmentedDataset aug = relabel_to_virtual(data.train, art.segregation.poisoned, data.train.num_classes);
      ConcealOptions co;
      co.epochs = cfg.conceal_epochs;
      save_model(art.concealed, p.concealed_model, concealment_metadata(aug, co, art.segregation.poisoned));
    }
    return 0;
  });
}

}  // namespace

Report run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  stage("config", [&] {
    cfg.validate();
    return 0;
  });
  Stopwatch sw;
  const ExperimentData data = stage("data", [&] { return prepare_data(cfg); });
  const double data_seconds = sw.seconds();
  RunArtifacts art = run_pipeline(cfg, data, progress);
  art.report.timing_seconds["data"] = data_seconds;
  write_outputs(cfg, data, art);
  return art.report;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "gamma") return SweepAxis::gamma;
  if (name == "eps") return SweepAxis::eps;
  if (name == "min_pts") return SweepAxis::min_pts;
  throw ConfigError("unknown sweep axis '" + name + "' (expected gamma, eps or min_pts)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::gamma: return "gamma";
    case SweepAxis::eps: return "eps";
    case SweepAxis::min_pts: return "min_pts";
  }
  return "gamma";
}

std::vector<Report> run_sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<double>& values,
                              const ProgressFn& progress) {
  if (values.empty()) throw StageError("config", "sweep needs at least one value", 2);
  auto named = [&](double v) {
    ExperimentConfig c = base;
    c.name = base.name + "_" + to_string(axis) + "_" + fmt_value(v);
    switch (axis) {
      case SweepAxis::gamma: c.poison_rate = v; break;
      case SweepAxis::eps: c.eps = v; break;
      case SweepAxis::min_pts:
        if (v != std::floor(v)) throw StageError("config", "min_pts values must be integers", 2);
        c.min_pts = static_cast<int>(v);
        break;
    }
    return c;
  };
  std::vector<ExperimentConfig> cfgs;
  for (double v : values) {
    cfgs.push_back(named(v));
    stage("config", [&] {
      cfgs.back().validate();
      return 0;
    });
  }

  std::vector<Report> reports;
  const bool shared = axis != SweepAxis::gamma && base.post_segregation == PostSegregationTraining::full;
  if (shared) {
    Stopwatch sw;
    const ExperimentData data = stage("data", [&] { return prepare_data(base); });
    const double data_seconds = sw.seconds();
    std::vector<ClusterVariant> variants;
    for (const auto& c : cfgs) variants.push_back({c.eps, c.min_pts});
    auto arts = run_pipeline(base, data, variants, progress);
    for (std::size_t i = 0; i < arts.size(); ++i) {
      arts[i].report.name = cfgs[i].name;
      for (auto& [k, v] : arts[i].report.config)
        if (k == "name") v = cfgs[i].name;
      arts[i].report.timing_seconds["data"] = data_seconds;
      write_outputs(cfgs[i], data, arts[i]);
      reports.push_back(arts[i].report);
    }
  } else {
    for (const auto& c : cfgs) {
      if (progress) progress("sweep run " + c.name);
      reports.push_back(run_experiment(c, progress));
    }
  }

  stage("output", [&] {
    std::filesystem::create_directories(base.out_dir);
    std::vector<std::string> header = {to_string(axis)};
    const auto h = report_csv_header();
    header.insert(header.end(), h.begin(), h.end());
    std::string table = csv_line(header);
    for (std::size_t i = 0; i < reports.size(); ++i) {
      std::vector<std::string> row = {fmt_value(values[i])};
      const auto r = report_csv_row(reports[i]);
      row.insert(row.end(), r.begin(), r.end());
      table += csv_line(row);
    }
    write_text(base.out_dir / ("sweep_" + to_string(axis) + ".csv"), table);
    return 0;
  });
  return reports;
}

void append_csv_locked(const std::filesystem::path& path, const std::vector<std::string>& header,
                       const std::vector<std::string>& row) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw Error("cannot open " + path.string());
  struct Closer {
    int fd;
    ~Closer() {
      ::flock(fd, LOCK_UN);
      ::close(fd);
    }
  } closer{fd};
  if (::flock(fd, LOCK_EX) != 0) throw Error("cannot lock " + path.string());
  struct stat st {};
  if (::fstat(fd, &st) != 0) throw Error("cannot stat " + path.string());
  std::string text = st.st_size == 0 ? csv_line(header) : std::string();
  text += csv_line(row);
  const char* p = text.data();
  std::size_t left = text.size();
  while (left > 0) {
    const ssize_t w = ::write(fd, p, left);
    if (w <= 0) throw Error("failed writing " + path.string());
    p += w;
    left -= static_cast<std::size_t>(w);
  }
}

void write_embeddings_csv(const std::filesystem::path& path, const SegregationResult& seg,
                          const std::vector<int>& labels) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << "epoch,sample_index,x,y,cluster_id,label,is_suspicious\n";
  char buf[160];
  for (std::size_t k = 0; k < seg.embeddings.size(); ++k) {
    const auto& emb = seg.embeddings[k];
    std::vector<std::uint8_t> susp(labels.size(), 0);
    for (const auto& log : seg.per_epoch_log)
      if (log.epoch == emb.epoch)
        for (const auto& s : log.suspicious)
          for (std::size_t i : s.members) susp[i] = 1;
    for (std::size_t i = 0; i < emb.points.rows; ++i) {
      std::snprintf(buf, sizeof buf, "%d,%zu,%.6g,%.6g,%d,%d,%d\n", emb.epoch, i, emb.points(i, 0),
                    emb.points(i, 1), emb.assignment.cluster[i], labels[i], susp[i]);
      f << buf;
    }
  }
  if (!f) throw Error("failed writing " + path.string());
}

void write_embedding_svg(const std::filesystem::path& path, const EpochEmbedding& emb,
                         const std::vector<int>& labels, const std::vector<std::uint8_t>& suspicious,
                         int num_classes) {
  const std::size_t n = emb.points.rows;
  float x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (n) {
    x0 = x1 = emb.points(0, 0);
    y0 = y1 = emb.points(0, 1);
    for (std::size_t i = 0; i < n; ++i) {
      x0 = std::min(x0, emb.points(i, 0));
      x1 = std::max(x1, emb.points(i, 0));
      y0 = std::min(y0, emb.points(i, 1));
      y1 = std::max(y1, emb.points(i, 1));
    }
  }
  const double size = 640, pad = 10;
  const double sx = (size - 2 * pad) / std::max(1e-6f, x1 - x0);
  const double sy = (size - 2 * pad) / std::max(1e-6f, y1 - y0);
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"12\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">epoch " << emb.epoch << "</text>\n";
  char buf[200];
  for (std::size_t i = 0; i < n; ++i) {
    const double hue = 360.0 * labels[i] / std::max(1, num_classes);
    const double cx = pad + (emb.points(i, 0) - x0) * sx;
    const double cy = size - pad - (emb.points(i, 1) - y0) * sy;
    if (suspicious[i])
      std::snprintf(buf, sizeof buf,
                    "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"2.6\" fill=\"hsl(%.0f,70%%,50%%)\" stroke=\"black\" "
                    "stroke-width=\"0.8\"/>\n",
                    cx, cy, hue);
    else
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"1.8\" fill=\"hsl(%.0f,70%%,50%%)\"/>\n", cx,
                    cy, hue);
    s << buf;
  }
  s << "</svg>\n";
  write_text(path, s.str());
}

}  // namespace csc
