#include "csc/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "binary_io.hpp"
#include "csc/errors.hpp"
#include "csc/random.hpp"

namespace csc {

void LabeledDataset::validate() const {
  if (shape.height <= 0 || shape.width <= 0 || shape.channels <= 0)
    throw ConsistencyError("dataset has a non-positive image dimension");
  if (num_classes <= 0) throw ConsistencyError("dataset declares no classes");
  if (images.size() != labels.size() * shape.pixels())
    throw ConsistencyError("image buffer does not match label count");
  if (poison_mask.size() != labels.size()) throw ConsistencyError("poison mask length mismatch");
  for (int y : labels)
    if (y < 0 || y >= num_classes) throw LabelRangeError("label " + std::to_string(y) + " out of range");
  for (float v : images)
    if (!(v >= 0.0f && v <= 1.0f)) throw ConsistencyError("pixel outside [0, 1]");
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.shape = shape;
  out.num_classes = num_classes;
  const std::size_t px = shape.pixels();
  out.images.reserve(indices.size() * px);
  out.labels.reserve(indices.size());
  out.poison_mask.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw IndexError("subset index " + std::to_string(i) + " out of range");
    const auto img = image(i);
    out.images.insert(out.images.end(), img.begin(), img.end());
    out.labels.push_back(labels[i]);
    out.poison_mask.push_back(poison_mask[i]);
  }
  return out;
}

std::vector<std::size_t> LabeledDataset::poisoned_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < poison_mask.size(); ++i)
    if (poison_mask[i] != 0) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------- triggers

TriggerSpec TriggerSpec::patch(int top, int left, int height, int width, float fill) {
  if (height <= 0 || width <= 0) throw ConfigError("patch must have positive extent");
  if (top < 0 || left < 0) throw ConfigError("patch origin must be non-negative");
  if (!(fill >= 0.0f && fill <= 1.0f)) throw ConfigError("patch fill must be in [0, 1]");
  return TriggerSpec(PatchTrigger{top, left, height, width, fill});
}

TriggerSpec TriggerSpec::blend(std::vector<float> pattern, float alpha) {
  if (!(alpha > 0.0f && alpha < 1.0f)) throw ConfigError("blend alpha must be strictly inside (0, 1)");
  if (pattern.empty()) throw ConfigError("blend pattern is empty");
  for (float v : pattern)
    if (!(v >= 0.0f && v <= 1.0f)) throw ConfigError("blend pattern outside [0, 1]");
  return TriggerSpec(BlendTrigger{std::move(pattern), alpha});
}

TriggerSpec TriggerSpec::signal(float amplitude, float frequency) {
  if (!(amplitude > 0.0f && amplitude < 1.0f)) throw ConfigError("signal amplitude must be in (0, 1)");
  if (!(frequency > 0.0f) || !std::isfinite(frequency)) throw ConfigError("signal frequency must be positive");
  return TriggerSpec(SignalTrigger{amplitude, frequency});
}

TriggerSpec TriggerSpec::default_patch(const ImageShape& shape) {
  const int h = std::min(3, shape.height);
  const int w = std::min(3, shape.width);
  return patch(shape.height - h, shape.width - w, h, w, 1.0f);
}

TriggerSpec TriggerSpec::default_blend(const ImageShape& shape, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xb1e4d));
  std::vector<float> pattern(shape.pixels());
  for (float& v : pattern) v = static_cast<float>(uniform01(rng));
  return blend(std::move(pattern), 0.2f);
}

TriggerSpec TriggerSpec::default_signal() { return signal(0.08f, 6.0f); }

TriggerSpec TriggerSpec::default_for(TriggerKind kind, const ImageShape& shape, std::uint64_t seed) {
  switch (kind) {
    case TriggerKind::patch:
      return default_patch(shape);
    case TriggerKind::blend:
      return default_blend(shape, seed);
    case TriggerKind::signal:
      return default_signal();
  }
  throw ConfigError("unknown trigger kind");
}

TriggerKind TriggerSpec::kind() const {
  if (as_patch() != nullptr) return TriggerKind::patch;
  if (as_blend() != nullptr) return TriggerKind::blend;
  return TriggerKind::signal;
}

std::string to_string(TriggerKind kind) {
  switch (kind) {
    case TriggerKind::patch:
      return "patch";
    case TriggerKind::blend:
      return "blend";
    case TriggerKind::signal:
      return "signal";
  }
  return "unknown";
}

TriggerKind parse_trigger_kind(const std::string& name) {
  if (name == "patch" || name == "badnets") return TriggerKind::patch;
  if (name == "blend") return TriggerKind::blend;
  if (name == "signal" || name == "sig") return TriggerKind::signal;
  throw ConfigError("unknown trigger kind '" + name + "'");
}

void apply_trigger(std::span<float> image, const ImageShape& shape, const TriggerSpec& trigger) {
  if (image.size() != shape.pixels()) throw ShapeError("image size does not match shape");
  const int C = shape.channels;
  if (const auto* p = trigger.as_patch()) {
    if (p->top + p->height > shape.height || p->left + p->width > shape.width)
      throw BoundsError("patch exceeds image bounds");
    for (int y = p->top; y < p->top + p->height; ++y)
      for (int x = p->left; x < p->left + p->width; ++x)
        for (int c = 0; c < C; ++c)
          image[(static_cast<std::size_t>(y) * shape.width + x) * C + c] = p->fill;
  } else if (const auto* b = trigger.as_blend()) {
    if (b->pattern.size() != image.size()) throw ShapeError("blend pattern shape mismatch");
    const float keep = 1.0f - b->alpha;
    for (std::size_t i = 0; i < image.size(); ++i)
      image[i] = std::clamp(keep * image[i] + b->alpha * b->pattern[i], 0.0f, 1.0f);
  } else if (const auto* s = trigger.as_signal()) {
    for (int x = 0; x < shape.width; ++x) {
      const double phase = 2.0 * std::numbers::pi * s->frequency * x / shape.width;
      const float delta = static_cast<float>(s->amplitude * std::sin(phase));
      for (int y = 0; y < shape.height; ++y)
        for (int c = 0; c < C; ++c) {
          float& v = image[(static_cast<std::size_t>(y) * shape.width + x) * C + c];
          v = std::clamp(v + delta, 0.0f, 1.0f);
        }
    }
  }
}

// ---------------------------------------------------------------- poisoning

std::vector<std::size_t> eligible_indices(const LabeledDataset& data, int target, PoisonMode mode) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool is_target = data.labels[i] == target;
    if ((mode == PoisonMode::clean) == is_target) out.push_back(i);
  }
  return out;
}

std::size_t poison_count(std::size_t eligible, double rate) {
  if (!(rate > 0.0 && rate < 1.0)) throw ConfigError("poisoning rate must be in (0, 1)");
  const auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(eligible)));
  if (count == 0) throw ConfigError("poisoning rate selects no samples from the eligible subset");
  return count;
}

LabeledDataset poison_dataset(const LabeledDataset& data, const PoisonSpec& spec) {
  if (spec.target_label < 0 || spec.target_label >= data.num_classes)
    throw ConfigError("target label outside the class range");
  const auto eligible = eligible_indices(data, spec.target_label, spec.mode);
  if (eligible.empty()) throw EligibilityError("no samples are eligible for poisoning");
  const std::size_t count = poison_count(eligible.size(), spec.rate);

  Rng rng(mix_seed(spec.seed, 0x901503));
  const auto perm = random_permutation(eligible.size(), rng);
  std::vector<std::size_t> chosen(count);
  for (std::size_t k = 0; k < count; ++k) chosen[k] = eligible[perm[k]];
  std::sort(chosen.begin(), chosen.end());

  LabeledDataset out = data;
  for (std::size_t i : chosen) {
    apply_trigger(out.image(i), out.shape, spec.trigger);
    if (spec.mode == PoisonMode::dirty) out.labels[i] = spec.target_label;
    out.poison_mask[i] = 1;
  }
  return out;
}

LabeledDataset build_triggered_testset(const LabeledDataset& test, const TriggerSpec& trigger, int target) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < test.size(); ++i)
    if (test.labels[i] != target) keep.push_back(i);
  LabeledDataset out = test.subset(keep);
  for (std::size_t i = 0; i < out.size(); ++i) {
    apply_trigger(out.image(i), out.shape, trigger);
    out.poison_mask[i] = 1;
  }
  return out;
}

// ---------------------------------------------------------------- IDX

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  if (off + 4 > b.size()) throw FormatError("IDX header truncated");
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

}  // namespace

LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
  const auto img = read_all(images_path);
  const auto lab = read_all(labels_path);
  if (be32(img, 0) != 0x00000803) throw FormatError("bad IDX image magic in " + images_path.string());
  if (be32(lab, 0) != 0x00000801) throw FormatError("bad IDX label magic in " + labels_path.string());
  const std::size_t n = be32(img, 4);
  const std::size_t rows = be32(img, 8);
  const std::size_t cols = be32(img, 12);
  const std::size_t n_labels = be32(lab, 4);
  if (img.size() != 16 + n * rows * cols) throw FormatError("IDX image payload has the wrong length");
  if (lab.size() != 8 + n_labels) throw FormatError("IDX label payload has the wrong length");
  if (n != n_labels) throw ConsistencyError("image count and label count differ");

  LabeledDataset out;
  out.shape = {static_cast<int>(rows), static_cast<int>(cols), 1};
  out.images.resize(n * rows * cols);
  for (std::size_t i = 0; i < out.images.size(); ++i) out.images[i] = img[16 + i] / 255.0f;
  out.labels.resize(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.labels[i] = lab[8 + i];
    max_label = std::max(max_label, out.labels[i]);
  }
  out.num_classes = max_label + 1;
  out.poison_mask.assign(n, 0);
  return out;
}

// ---------------------------------------------------------------- synthetic

namespace {

// Per-class pattern in [-1, 1]: a few signed Gaussian bumps.
std::vector<double> class_pattern(int cls, const ImageShape& shape, std::uint64_t template_seed) {
  Rng rng(mix_seed(template_seed, static_cast<std::uint64_t>(cls)));
  std::vector<double> pat(shape.pixels(), 0.0);
  const double sigma = std::max(1.0, shape.width / 6.0);
  for (int c = 0; c < shape.channels; ++c) {
    for (int bump = 0; bump < 3; ++bump) {
      const double cy = uniform(rng, 0.0, shape.height - 1.0);
      const double cx = uniform(rng, 0.0, shape.width - 1.0);
      const double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
      for (int y = 0; y < shape.height; ++y)
        for (int x = 0; x < shape.width; ++x) {
          const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
          pat[(static_cast<std::size_t>(y) * shape.width + x) * shape.channels + c] +=
              sign * std::exp(-d2 / (2.0 * sigma * sigma));
        }
    }
  }
  double peak = 0.0;
  for (double v : pat) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : pat) v /= peak;
  return pat;
}

}  // namespace

LabeledDataset make_synthetic(int num_per_class, int num_classes, const ImageShape& shape,
                              std::uint64_t seed, const SyntheticOptions& options) {
  if (num_per_class < 1 || num_classes < 1 || shape.height < 1 || shape.width < 1 || shape.channels < 1)
    throw ConfigError("synthetic dataset dimensions must be positive");

  std::vector<std::vector<double>> templates;
  templates.reserve(num_classes);
  for (int k = 0; k < num_classes; ++k) templates.push_back(class_pattern(k, shape, options.template_seed));

  LabeledDataset out;
  out.shape = shape;
  out.num_classes = num_classes;
  const std::size_t m = static_cast<std::size_t>(num_per_class) * num_classes;
  out.images.resize(m * shape.pixels());
  out.labels.resize(m);
  out.poison_mask.assign(m, 0);

  Rng rng(mix_seed(seed, 0x5a17));
  const int s = options.max_shift;
  std::size_t idx = 0;
  // Interleave classes so that any prefix of the dataset is balanced.
  for (int r = 0; r < num_per_class; ++r) {
    for (int k = 0; k < num_classes; ++k, ++idx) {
      out.labels[idx] = k;
      const int dy = s > 0 ? static_cast<int>(uniform_index(rng, 2 * s + 1)) - s : 0;
      const int dx = s > 0 ? static_cast<int>(uniform_index(rng, 2 * s + 1)) - s : 0;
      auto img = out.image(idx);
      std::vector<double> tpl = templates[k];
      if (options.ambiguous_fraction > 0.0 && num_classes > 1 &&
          uniform01(rng) < options.ambiguous_fraction) {
        const int j = (k + (uniform01(rng) < 0.5 ? num_classes - 1 : 1)) % num_classes;
        const double lambda = uniform(rng, 0.0, options.ambiguity_max);
        for (std::size_t p = 0; p < tpl.size(); ++p) tpl[p] = (1.0 - lambda) * tpl[p] + lambda * templates[j][p];
      }
      for (int y = 0; y < shape.height; ++y) {
        const int sy = std::clamp(y - dy, 0, shape.height - 1);
        for (int x = 0; x < shape.width; ++x) {
          const int sx = std::clamp(x - dx, 0, shape.width - 1);
          for (int c = 0; c < shape.channels; ++c) {
            const double base =
                0.5 + options.class_contrast * tpl[(static_cast<std::size_t>(sy) * shape.width + sx) * shape.channels + c];
            const double v = base + options.noise_sigma * standard_normal(rng);
            img[(static_cast<std::size_t>(y) * shape.width + x) * shape.channels + c] =
                static_cast<float>(std::clamp(v, 0.0, 1.0));
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- container

void save_dataset(const LabeledDataset& data, const std::filesystem::path& path) {
  data.validate();
  io::Writer w;
  w.header(io::ContainerKind::dataset);
  w.u64(data.size());
  w.u32(static_cast<std::uint32_t>(data.shape.height));
  w.u32(static_cast<std::uint32_t>(data.shape.width));
  w.u32(static_cast<std::uint32_t>(data.shape.channels));
  w.u32(static_cast<std::uint32_t>(data.num_classes));
  w.blob<float>(data.images);
  std::vector<std::int32_t> labels(data.labels.begin(), data.labels.end());
  w.blob<std::int32_t>(labels);
  w.blob<std::uint8_t>(data.poison_mask);
  w.write_file(path);
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  auto r = io::Reader::from_file(path);
  r.header(io::ContainerKind::dataset);
  LabeledDataset out;
  const std::uint64_t m = r.u64();
  out.shape.height = static_cast<int>(r.u32());
  out.shape.width = static_cast<int>(r.u32());
  out.shape.channels = static_cast<int>(r.u32());
  out.num_classes = static_cast<int>(r.u32());
  out.images = r.blob<float>();
  const auto labels = r.blob<std::int32_t>();
  out.labels.assign(labels.begin(), labels.end());
  out.poison_mask = r.blob<std::uint8_t>();
  if (out.labels.size() != m) throw FormatError("dataset container label count mismatch");
  out.validate();
  return out;
}

}  // namespace csc
