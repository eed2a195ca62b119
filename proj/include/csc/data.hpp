#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace csc {

struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t pixels() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(channels);
  }
  bool operator==(const ImageShape&) const = default;
};

// Images are stored HWC, contiguous per sample, values in [0, 1].
// poison_mask is ground truth and is only read by evaluation code.
struct LabeledDataset {
  ImageShape shape;
  int num_classes = 0;
  std::vector<float> images;
  std::vector<int> labels;
  std::vector<std::uint8_t> poison_mask;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }

  std::span<const float> image(std::size_t i) const {
    return {images.data() + i * shape.pixels(), shape.pixels()};
  }
  std::span<float> image(std::size_t i) { return {images.data() + i * shape.pixels(), shape.pixels()}; }

  // Throws ConsistencyError / LabelRangeError when an invariant is broken.
  void validate() const;

  // Samples at the given indices, in the given order.
  LabeledDataset subset(std::span<const std::size_t> indices) const;

  std::vector<std::size_t> poisoned_indices() const;

  bool operator==(const LabeledDataset&) const = default;
};

// ---------------------------------------------------------------- triggers

struct PatchTrigger {
  int top = 0;
  int left = 0;
  int height = 3;
  int width = 3;
  float fill = 1.0f;
};

struct BlendTrigger {
  std::vector<float> pattern;  // HWC, same shape as the images it is applied to
  float alpha = 0.2f;
};

// out = clamp(image + amplitude * sin(2*pi*frequency*col/width)).
struct SignalTrigger {
  float amplitude = 0.08f;
  float frequency = 6.0f;
};

enum class TriggerKind { patch, blend, signal };

class TriggerSpec {
 public:
  // Factories check the value invariants and throw ConfigError.
  static TriggerSpec patch(int top, int left, int height, int width, float fill);
  static TriggerSpec blend(std::vector<float> pattern, float alpha);
  static TriggerSpec signal(float amplitude, float frequency);

  // Defaults: 3x3 white square in the bottom-right corner; seeded uniform
  // noise blended at alpha 0.2; sinusoid of amplitude 0.08 with 6 cycles.
  static TriggerSpec default_patch(const ImageShape& shape);
  static TriggerSpec default_blend(const ImageShape& shape, std::uint64_t seed);
  static TriggerSpec default_signal();
  static TriggerSpec default_for(TriggerKind kind, const ImageShape& shape, std::uint64_t seed);

  TriggerKind kind() const;
  const PatchTrigger* as_patch() const { return std::get_if<PatchTrigger>(&v_); }
  const BlendTrigger* as_blend() const { return std::get_if<BlendTrigger>(&v_); }
  const SignalTrigger* as_signal() const { return std::get_if<SignalTrigger>(&v_); }

 private:
  explicit TriggerSpec(std::variant<PatchTrigger, BlendTrigger, SignalTrigger> v) : v_(std::move(v)) {}
  std::variant<PatchTrigger, BlendTrigger, SignalTrigger> v_;
};

std::string to_string(TriggerKind kind);
TriggerKind parse_trigger_kind(const std::string& name);

// Applies the trigger in place. Throws BoundsError if a patch does not fit
// and ShapeError if a blend pattern has the wrong size.
void apply_trigger(std::span<float> image, const ImageShape& shape, const TriggerSpec& trigger);

// ---------------------------------------------------------------- poisoning

enum class PoisonMode { dirty, clean };

struct PoisonSpec {
  TriggerSpec trigger = TriggerSpec::signal(0.08f, 6.0f);
  int target_label = 0;
  double rate = 0.1;  // fraction of the eligible subset
  PoisonMode mode = PoisonMode::dirty;
  std::uint64_t seed = 0;
};

// Samples that may be poisoned: label != target (dirty) or == target (clean).
std::vector<std::size_t> eligible_indices(const LabeledDataset& data, int target, PoisonMode mode);

// round(rate * eligible); throws ConfigError when that rounds to zero or
// the rate is outside (0, 1).
std::size_t poison_count(std::size_t eligible, double rate);

LabeledDataset poison_dataset(const LabeledDataset& data, const PoisonSpec& spec);

// Triggered copies of every test sample whose label is not the target.
// Labels keep their original values.
LabeledDataset build_triggered_testset(const LabeledDataset& test, const TriggerSpec& trigger, int target);

// ---------------------------------------------------------------- sources

// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
// Pixel bytes are scaled by 1/255. num_classes is max label + 1.
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path);

struct SyntheticOptions {
  double noise_sigma = 0.1;
  // Amplitude of the class-specific part of each template, around a
  // mid-gray background shared by every class.
  double class_contrast = 0.12;
  // Random per-sample translation of the template, in pixels.
  int max_shift = 1;
  // Fraction of samples whose template is blended towards one of the two
  // neighbouring classes (k - 1 or k + 1 mod N) with weight drawn from
  // U(0, ambiguity_max). Above 0.5 the sample looks more like the
  // neighbour than its own label.
  double ambiguous_fraction = 0.0;
  double ambiguity_max = 0.8;
  std::uint64_t template_seed = 0x5eed;
};

// Class k samples are Gaussian pixel noise (clamped to [0, 1]) around a
// deterministic class template. Templates depend only on
// options.template_seed, so train and test sets drawn with different seeds
// share them.
LabeledDataset make_synthetic(int num_per_class, int num_classes, const ImageShape& shape,
                              std::uint64_t seed, const SyntheticOptions& options = {});

// Binary container: "CSC1", version, kind tag, dims, then raw blobs.
void save_dataset(const LabeledDataset& data, const std::filesystem::path& path);
LabeledDataset load_dataset(const std::filesystem::path& path);

}  // namespace csc
