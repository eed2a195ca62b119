#include "csc/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "csc/errors.hpp"

namespace csc {
namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError("invalid value '" + v + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("invalid boolean '" + v + "' for " + key);
}

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define CSC_INT(k, m)                                                       \
  Field{k, [](const ExperimentConfig& c) { return std::to_string(c.m); },  \
        [](ExperimentConfig& c, const std::string& v) { c.m = parse_number<int>(k, v); }}
#define CSC_U64(k, m)                                                       \
  Field{k, [](const ExperimentConfig& c) { return std::to_string(c.m); },  \
        [](ExperimentConfig& c, const std::string& v) { c.m = parse_number<std::uint64_t>(k, v); }}
#define CSC_DBL(k, m)                                                       \
  Field{k, [](const ExperimentConfig& c) { return fmt(c.m); },             \
        [](ExperimentConfig& c, const std::string& v) { c.m = parse_number<double>(k, v); }}
#define CSC_BOOL(k, m)                                                         \
  Field{k, [](const ExperimentConfig& c) { return c.m ? "true" : "false"; },  \
        [](ExperimentConfig& c, const std::string& v) { c.m = parse_bool(k, v); }}
#define CSC_STR(k, m)                                                 \
  Field{k, [](const ExperimentConfig& c) { return std::string(c.m); }, \
        [](ExperimentConfig& c, const std::string& v) { c.m = v; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      CSC_STR("name", name),
      CSC_U64("seed", seed),
      Field{"source",
            [](const ExperimentConfig& c) {
              return std::string(c.source == DataSource::synthetic ? "synthetic"
                                 : c.source == DataSource::idx     ? "idx"
                                                                   : "container");
            },
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "synthetic") c.source = DataSource::synthetic;
              else if (v == "idx") c.source = DataSource::idx;
              else if (v == "container") c.source = DataSource::container;
              else throw ConfigError("unknown source '" + v + "'");
            }},
      Field{"data_dir", [](const ExperimentConfig& c) { return c.data_dir.string(); },
            [](ExperimentConfig& c, const std::string& v) { c.data_dir = v; }},
      CSC_STR("train_images", train_images),
      CSC_STR("train_labels", train_labels),
      CSC_STR("test_images", test_images),
      CSC_STR("test_labels", test_labels),
      CSC_STR("train_container", train_container),
      CSC_STR("test_container", test_container),
      CSC_INT("train_subset", train_subset),
      CSC_INT("test_subset", test_subset),
      CSC_INT("num_classes", num_classes),
      CSC_INT("image_size", image_size),
      CSC_INT("channels", channels),
      CSC_INT("train_per_class", train_per_class),
      CSC_INT("test_per_class", test_per_class),
      CSC_DBL("synthetic_noise", synthetic.noise_sigma),
      CSC_DBL("synthetic_contrast", synthetic.class_contrast),
      CSC_INT("synthetic_max_shift", synthetic.max_shift),
      CSC_U64("synthetic_template_seed", synthetic.template_seed),
      CSC_DBL("synthetic_ambiguous_fraction", synthetic.ambiguous_fraction),
      CSC_DBL("synthetic_ambiguity_max", synthetic.ambiguity_max),
      CSC_INT("conv1_channels", conv1_channels),
      CSC_INT("conv2_channels", conv2_channels),
      CSC_INT("feature_dim", feature_dim),
      CSC_INT("epochs", epochs),
      CSC_INT("batch_size", batch_size),
      CSC_DBL("learning_rate", learning_rate),
      CSC_DBL("momentum", momentum),
      Field{"post_segregation",
            [](const ExperimentConfig& c) {
              return std::string(c.post_segregation == PostSegregationTraining::full ? "full" : "benign");
            },
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "full") c.post_segregation = PostSegregationTraining::full;
              else if (v == "benign") c.post_segregation = PostSegregationTraining::benign;
              else throw ConfigError("post_segregation must be full or benign");
            }},
      Field{"attack", [](const ExperimentConfig& c) { return to_string(c.attack); },
            [](ExperimentConfig& c, const std::string& v) { c.attack = parse_attack_kind(v); }},
      CSC_INT("target_label", target_label),
      CSC_DBL("poison_rate", poison_rate),
      Field{"poison_mode",
            [](const ExperimentConfig& c) {
              if (!c.poison_mode) return std::string("auto");
              return std::string(*c.poison_mode == PoisonMode::dirty ? "dirty" : "clean");
            },
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "auto") c.poison_mode.reset();
              else if (v == "dirty") c.poison_mode = PoisonMode::dirty;
              else if (v == "clean") c.poison_mode = PoisonMode::clean;
              else throw ConfigError("poison_mode must be auto, dirty or clean");
            }},
      CSC_INT("patch_size", patch_size),
      CSC_DBL("patch_fill", patch_fill),
      CSC_DBL("blend_alpha", blend_alpha),
      CSC_DBL("signal_amplitude", signal_amplitude),
      CSC_DBL("signal_frequency", signal_frequency),
      CSC_INT("ep_detect", ep_detect),
      CSC_DBL("eps", eps),
      CSC_INT("min_pts", min_pts),
      CSC_INT("min_occurrence", min_occurrence),
      CSC_DBL("perplexity", perplexity),
      CSC_INT("tsne_iterations", tsne_iterations),
      CSC_INT("conceal_epochs", conceal_epochs),
      CSC_BOOL("conceal_class_weighted", conceal_class_weighted),
      CSC_BOOL("run_baselines", run_baselines),
      CSC_DBL("assumed_poison_rate", assumed_poison_rate),
      CSC_INT("ac_proj_dims", ac_proj_dims),
      CSC_INT("unlearn_epochs", unlearn_epochs),
      CSC_DBL("unlearn_lr", unlearn_lr),
      CSC_BOOL("reference_clean_model", reference_clean_model),
      Field{"out_dir", [](const ExperimentConfig& c) { return c.out_dir.string(); },
            [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }},
      CSC_BOOL("dump_embeddings", dump_embeddings),
      CSC_BOOL("svg", svg),
      CSC_BOOL("save_models", save_models),
  };
  return table;
}

#undef CSC_INT
#undef CSC_U64
#undef CSC_DBL
#undef CSC_BOOL
#undef CSC_STR

}  // namespace

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::patch: return "patch";
    case AttackKind::blend: return "blend";
    case AttackKind::signal: return "signal";
  }
  return "none";
}

AttackKind parse_attack_kind(const std::string& name) {
  if (name == "none") return AttackKind::none;
  if (name == "patch" || name == "badnets") return AttackKind::patch;
  if (name == "blend") return AttackKind::blend;
  if (name == "signal" || name == "sig") return AttackKind::signal;
  throw ConfigError("unknown attack kind '" + name + "'");
}

PoisonMode ExperimentConfig::effective_mode() const {
  if (poison_mode) return *poison_mode;
  return attack == AttackKind::signal ? PoisonMode::clean : PoisonMode::dirty;
}

double ExperimentConfig::effective_assumed_rate() const {
  return assumed_poison_rate > 0 ? assumed_poison_rate : poison_rate;
}

void ExperimentConfig::validate(bool check_files) const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(epochs >= 0, "epochs must be non-negative");
  require(ep_detect >= 0, "ep_detect must be non-negative");
  require(ep_detect <= epochs, "ep_detect must not exceed epochs");
  require(conceal_epochs >= 1, "conceal_epochs must be at least 1");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(learning_rate > 0, "learning_rate must be positive");
  require(momentum >= 0 && momentum < 1, "momentum must lie in [0, 1)");
  require(eps > 0, "eps must be positive");
  require(min_pts >= 1, "min_pts must be at least 1");
  require(min_occurrence >= 1, "min_occurrence must be at least 1");
  require(perplexity > 0, "perplexity must be positive");
  require(tsne_iterations >= 1, "tsne_iterations must be at least 1");
  require(num_classes >= 2, "num_classes must be at least 2");
  require(target_label >= 0 && target_label < num_classes, "target_label out of range");
  require(image_size >= 4 && channels >= 1, "image dimensions too small");
  require(train_per_class >= 1 && test_per_class >= 1, "per-class counts must be positive");
  require(feature_dim >= 1 && conv1_channels >= 1 && conv2_channels >= 1, "layer widths must be positive");
  require(ac_proj_dims >= 2, "ac_proj_dims must be at least 2");
  require(unlearn_epochs >= 0 && unlearn_lr > 0, "invalid unlearning settings");
  if (attack != AttackKind::none) {
    require(poison_rate > 0 && poison_rate < 1, "poison_rate must lie in (0, 1)");
    require(effective_assumed_rate() > 0 && 1.5 * effective_assumed_rate() < 1, "assumed_poison_rate out of range");
  }
  if (check_files) {
    auto exists = [&](const std::string& f) {
      const auto p = data_dir / f;
      if (!std::filesystem::exists(p)) throw DataError("missing data file " + p.string());
    };
    if (source == DataSource::idx) {
      for (const auto* f : {&train_images, &train_labels, &test_images, &test_labels}) exists(*f);
    } else if (source == DataSource::container) {
      require(!train_container.empty() && !test_container.empty(), "container source needs both files");
      exists(train_container);
      exists(test_container);
    }
  }
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields())
    if (key == f.key) {
      f.set(*this, value);
      return;
    }
  throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (!header) {
      if (line != kConfigHeader)
        throw ConfigError("config must start with '" + std::string(kConfigHeader) + "', found '" + line + "'");
      header = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  if (!header) throw ConfigError("empty config (missing header line)");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig& cfg) {
  std::string out = std::string(kConfigHeader) + "\n";
  for (const auto& [k, v] : cfg.entries()) out += k + " = " + v + "\n";
  return out;
}

}  // namespace csc
