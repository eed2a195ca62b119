#include "csc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "csc/errors.hpp"
#include "csc/random.hpp"
#include "csc/simd.hpp"

namespace csc {

void Architecture::validate() const {
  if (input.height < 4 || input.width < 4 || input.channels < 1)
    throw ShapeError("input must be at least 4x4 with one channel");
  if (conv1_channels < 1 || conv2_channels < 1 || feature_dim < 1 || num_outputs < 1)
    throw ShapeError("layer widths must be positive");
}

template <class T>
Parameters<T> Parameters<T>::zeros_like(const Architecture& a) {
  Parameters<T> p;
  const std::size_t c_in = static_cast<std::size_t>(a.input.channels);
  p.conv1_w.assign(9 * c_in * a.conv1_channels, T{});
  p.conv1_b.assign(a.conv1_channels, T{});
  p.conv2_w.assign(9 * static_cast<std::size_t>(a.conv1_channels) * a.conv2_channels, T{});
  p.conv2_b.assign(a.conv2_channels, T{});
  p.fc_w.assign(a.flat_dim() * a.feature_dim, T{});
  p.fc_b.assign(a.feature_dim, T{});
  p.head_w.assign(static_cast<std::size_t>(a.feature_dim) * a.num_outputs, T{});
  p.head_b.assign(a.num_outputs, T{});
  return p;
}

template struct Parameters<float>;
template struct Parameters<double>;

namespace {

void init_uniform(std::vector<float>& v, double bound, Rng& rng) {
  for (float& x : v) x = static_cast<float>(uniform(rng, -bound, bound));
}

// Initial heads and replacement heads draw from different streams, so a
// replacement with the model's own seed is still a fresh draw.
constexpr std::uint64_t kHeadStream = 100;
constexpr std::uint64_t kReplacementHeadStream = 101;

void init_head(Parameters<float>& p, const Architecture& a, std::uint64_t seed, std::uint64_t stream) {
  Rng rng(mix_seed(seed, stream));
  const double bound = 1.0 / std::sqrt(static_cast<double>(a.feature_dim));
  init_uniform(p.head_w, bound, rng);
  init_uniform(p.head_b, bound, rng);
}

// ---------------------------------------------------------------- GEMM policy

template <class T>
struct Gemm;

template <>
struct Gemm<float> {
  static void nn(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n) {
    simd::active().gemm_nn(a, b, c, m, k, n);
  }
  static void tn(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n) {
    simd::active().gemm_tn(a, b, c, m, k, n);
  }
  static void nt(const float* a, const float* b, float* c, std::size_t m, std::size_t n, std::size_t k) {
    simd::active().gemm_nt(a, b, c, m, n, k);
  }
};

template <>
struct Gemm<double> {
  static void nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] += a[i * k + p] * b[p * n + j];
  }
  static void tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) c[p * n + j] += a[i * k + p] * b[i * n + j];
  }
  static void nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += a[i * n + j] * b[p * n + j];
        c[i * k + p] += acc;
      }
  }
};

// ---------------------------------------------------------------- layers

// 3x3 same-padding im2col for HWC images; row = output pixel,
// column = (ky * 3 + kx) * C + c.
template <class T>
void im2col3x3(const T* in, std::size_t batch, int H, int W, int C, std::vector<T>& cols) {
  const std::size_t K = 9 * static_cast<std::size_t>(C);
  cols.assign(batch * H * W * K, T{});
  for (std::size_t b = 0; b < batch; ++b) {
    const T* img = in + b * H * W * C;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        T* row = cols.data() + ((b * H + y) * W + x) * K;
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= H) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= W) continue;
            const T* src = img + (static_cast<std::size_t>(sy) * W + sx) * C;
            std::copy(src, src + C, row + (ky * 3 + kx) * C);
          }
        }
      }
  }
}

template <class T>
void col2im3x3(const std::vector<T>& cols, std::size_t batch, int H, int W, int C, T* out) {
  const std::size_t K = 9 * static_cast<std::size_t>(C);
  std::fill(out, out + batch * H * W * C, T{});
  for (std::size_t b = 0; b < batch; ++b) {
    T* img = out + b * H * W * C;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const T* row = cols.data() + ((b * H + y) * W + x) * K;
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= H) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= W) continue;
            T* dst = img + (static_cast<std::size_t>(sy) * W + sx) * C;
            const T* src = row + (ky * 3 + kx) * C;
            for (int c = 0; c < C; ++c) dst[c] += src[c];
          }
        }
      }
  }
}

template <class T>
void add_bias_relu(std::vector<T>& x, const std::vector<T>& bias, bool relu) {
  const std::size_t n = bias.size();
  for (std::size_t i = 0; i < x.size(); i += n)
    for (std::size_t j = 0; j < n; ++j) {
      T v = x[i + j] + bias[j];
      x[i + j] = relu && v < T{} ? T{} : v;
    }
}

// 2x2 stride-2 max pool (floor). argmax stores the flat input index.
template <class T>
void maxpool2(const std::vector<T>& in, std::size_t batch, int H, int W, int C, std::vector<T>& out,
              std::vector<std::uint32_t>& argmax) {
  const int OH = H / 2, OW = W / 2;
  out.assign(batch * OH * OW * C, T{});
  argmax.assign(out.size(), 0);
  for (std::size_t b = 0; b < batch; ++b)
    for (int oy = 0; oy < OH; ++oy)
      for (int ox = 0; ox < OW; ++ox)
        for (int c = 0; c < C; ++c) {
          std::size_t best = ((b * H + 2 * oy) * W + 2 * ox) * C + c;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t idx = ((b * H + 2 * oy + dy) * W + 2 * ox + dx) * C + c;
              if (in[idx] > in[best]) best = idx;
            }
          const std::size_t o = ((b * OH + oy) * OW + ox) * C + c;
          out[o] = in[best];
          argmax[o] = static_cast<std::uint32_t>(best);
        }
}

template <class T>
struct Activations {
  std::vector<T> cols1, a1, p1, cols2, a2, p2, z, logits;
  std::vector<std::uint32_t> idx1, idx2;
};

template <class T>
void forward_impl(const Architecture& a, const Parameters<T>& p, const T* images, std::size_t batch,
                  Activations<T>& act) {
  const int H = a.input.height, W = a.input.width, C = a.input.channels;
  const int c1 = a.conv1_channels, c2 = a.conv2_channels;
  const int H1 = a.pooled1_h(), W1 = a.pooled1_w();
  const std::size_t F = a.feature_dim, O = a.num_outputs, flat = a.flat_dim();

  im2col3x3(images, batch, H, W, C, act.cols1);
  act.a1.assign(batch * H * W * c1, T{});
  Gemm<T>::nn(act.cols1.data(), p.conv1_w.data(), act.a1.data(), batch * H * W, 9 * C, c1);
  add_bias_relu(act.a1, p.conv1_b, true);
  maxpool2(act.a1, batch, H, W, c1, act.p1, act.idx1);

  im2col3x3(act.p1.data(), batch, H1, W1, c1, act.cols2);
  act.a2.assign(batch * H1 * W1 * c2, T{});
  Gemm<T>::nn(act.cols2.data(), p.conv2_w.data(), act.a2.data(), batch * H1 * W1, 9 * c1, c2);
  add_bias_relu(act.a2, p.conv2_b, true);
  maxpool2(act.a2, batch, H1, W1, c2, act.p2, act.idx2);

  act.z.assign(batch * F, T{});
  Gemm<T>::nn(act.p2.data(), p.fc_w.data(), act.z.data(), batch, flat, F);
  add_bias_relu(act.z, p.fc_b, true);

  act.logits.assign(batch * O, T{});
  Gemm<T>::nn(act.z.data(), p.head_w.data(), act.logits.data(), batch, F, O);
  add_bias_relu(act.logits, p.head_b, false);
}

template <class T>
void bias_grad(const std::vector<T>& dy, std::vector<T>& db) {
  const std::size_t n = db.size();
  for (std::size_t i = 0; i < dy.size(); i += n)
    for (std::size_t j = 0; j < n; ++j) db[j] += dy[i + j];
}

template <class T>
void relu_mask(std::vector<T>& grad, const std::vector<T>& activation) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(activation[i] > T{})) grad[i] = T{};
}

// Softmax cross-entropy in double; returns the mean loss and writes the
// gradient w.r.t. the logits.
template <class T>
double softmax_ce(const T* logits, std::size_t batch, std::size_t classes, std::span<const int> labels,
                  std::span<const float> weights, T* grad) {
  if (labels.size() != batch) throw ShapeError("label count does not match batch size");
  if (!weights.empty() && weights.size() != classes) throw ShapeError("class weight count mismatch");
  double total = 0.0;
  std::vector<double> e(classes);
  for (std::size_t b = 0; b < batch; ++b) {
    const int y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw LabelRangeError("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    const T* row = logits + b * classes;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < classes; ++k) mx = std::max(mx, static_cast<double>(row[k]));
    double sum = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      e[k] = std::exp(static_cast<double>(row[k]) - mx);
      sum += e[k];
    }
    const double w = weights.empty() ? 1.0 : weights[y];
    const double log_p = static_cast<double>(row[y]) - mx - std::log(sum);
    total += -w * log_p;
    if (grad != nullptr) {
      T* g = grad + b * classes;
      for (std::size_t k = 0; k < classes; ++k) {
        const double prob = e[k] / sum;
        g[k] = static_cast<T>(w * (prob - (static_cast<int>(k) == y ? 1.0 : 0.0)) / static_cast<double>(batch));
      }
    }
  }
  return total / static_cast<double>(batch);
}

template <class T>
void backward_impl(const Architecture& a, const Parameters<T>& p, Activations<T>& act, std::size_t batch,
                   std::vector<T>& dlogits, Parameters<T>& g, bool head_only) {
  const int H = a.input.height, W = a.input.width, C = a.input.channels;
  const int c1 = a.conv1_channels, c2 = a.conv2_channels;
  const int H1 = a.pooled1_h(), W1 = a.pooled1_w();
  const std::size_t F = a.feature_dim, O = a.num_outputs, flat = a.flat_dim();

  Gemm<T>::tn(act.z.data(), dlogits.data(), g.head_w.data(), batch, F, O);
  bias_grad(dlogits, g.head_b);
  if (head_only) return;

  std::vector<T> dz(batch * F, T{});
  Gemm<T>::nt(dlogits.data(), p.head_w.data(), dz.data(), batch, O, F);
  relu_mask(dz, act.z);
  Gemm<T>::tn(act.p2.data(), dz.data(), g.fc_w.data(), batch, flat, F);
  bias_grad(dz, g.fc_b);

  std::vector<T> dp2(batch * flat, T{});
  Gemm<T>::nt(dz.data(), p.fc_w.data(), dp2.data(), batch, F, flat);
  std::vector<T> da2(act.a2.size(), T{});
  for (std::size_t o = 0; o < dp2.size(); ++o) da2[act.idx2[o]] += dp2[o];
  relu_mask(da2, act.a2);
  Gemm<T>::tn(act.cols2.data(), da2.data(), g.conv2_w.data(), batch * H1 * W1, 9 * c1, c2);
  bias_grad(da2, g.conv2_b);

  std::vector<T> dcols2(act.cols2.size(), T{});
  Gemm<T>::nt(da2.data(), p.conv2_w.data(), dcols2.data(), batch * H1 * W1, c2, 9 * c1);
  std::vector<T> dp1(act.p1.size(), T{});
  col2im3x3(dcols2, batch, H1, W1, c1, dp1.data());
  std::vector<T> da1(act.a1.size(), T{});
  for (std::size_t o = 0; o < dp1.size(); ++o) da1[act.idx1[o]] += dp1[o];
  relu_mask(da1, act.a1);
  Gemm<T>::tn(act.cols1.data(), da1.data(), g.conv1_w.data(), batch * H * W, 9 * C, c1);
  bias_grad(da1, g.conv1_b);
}

void check_batch(const Architecture& a, std::size_t images, std::size_t batch) {
  if (images != batch * a.input.pixels())
    throw ShapeError("image buffer holds " + std::to_string(images) + " values, expected " +
                     std::to_string(batch * a.input.pixels()));
}

Matrix to_matrix(std::vector<float> v, std::size_t rows, std::size_t cols) {
  Matrix m;
  m.rows = rows;
  m.cols = cols;
  m.data = std::move(v);
  return m;
}

}  // namespace

// ---------------------------------------------------------------- public

Model make_model(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  Model m;
  m.arch = arch;
  m.rng_seed = seed;
  m.params = Parameters<float>::zeros_like(arch);
  auto t = m.params.tensors();
  const std::size_t fan_in[3] = {9u * static_cast<std::size_t>(arch.input.channels),
                                 9u * static_cast<std::size_t>(arch.conv1_channels), arch.flat_dim()};
  for (std::size_t layer = 0; layer < 3; ++layer) {
    Rng rng(mix_seed(seed, layer));
    const double fi = static_cast<double>(fan_in[layer]);
    init_uniform(*t[2 * layer], std::sqrt(6.0 / fi), rng);
    init_uniform(*t[2 * layer + 1], 1.0 / std::sqrt(fi), rng);
  }
  init_head(m.params, arch, seed, kHeadStream);
  return m;
}

std::vector<float> extractor_snapshot(const Model& model) {
  std::vector<float> out;
  const auto t = model.params.tensors();
  for (std::size_t i = 0; i < Parameters<float>::kExtractorTensors; ++i)
    out.insert(out.end(), t[i]->begin(), t[i]->end());
  return out;
}

ForwardOutput forward(const Model& model, std::span<const float> images, std::size_t batch) {
  check_batch(model.arch, images.size(), batch);
  Activations<float> act;
  forward_impl(model.arch, model.params, images.data(), batch, act);
  ForwardOutput out;
  out.features = to_matrix(std::move(act.z), batch, model.arch.feature_dim);
  out.logits = to_matrix(std::move(act.logits), batch, model.arch.num_outputs);
  return out;
}

Matrix head_logits(const Model& model, const FeatureMatrix& features) {
  if (features.cols != static_cast<std::size_t>(model.arch.feature_dim))
    throw ShapeError("feature width does not match the head");
  std::vector<float> logits(features.rows * model.arch.num_outputs, 0.0f);
  Gemm<float>::nn(features.data.data(), model.params.head_w.data(), logits.data(), features.rows,
                  features.cols, model.arch.num_outputs);
  add_bias_relu(logits, model.params.head_b, false);
  return to_matrix(std::move(logits), features.rows, model.arch.num_outputs);
}

LossResult ce_loss(const Matrix& logits, std::span<const int> labels, std::span<const float> class_weights) {
  LossResult r;
  r.grad_logits = Matrix(logits.rows, logits.cols);
  r.loss = softmax_ce(logits.data.data(), logits.rows, logits.cols, labels, class_weights,
                      r.grad_logits.data.data());
  return r;
}

Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows, logits.cols);
  for (std::size_t b = 0; b < logits.rows; ++b) {
    const auto row = logits.row(b);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (float v : row) sum += std::exp(static_cast<double>(v) - mx);
    for (std::size_t k = 0; k < logits.cols; ++k)
      out(b, k) = static_cast<float>(std::exp(static_cast<double>(row[k]) - mx) / sum);
  }
  return out;
}

template <class T>
double loss_and_gradients(const Architecture& arch, const Parameters<T>& params, std::span<const T> images,
                          std::span<const int> labels, Parameters<T>& grads, bool head_only) {
  const std::size_t batch = labels.size();
  check_batch(arch, images.size(), batch);
  grads = Parameters<T>::zeros_like(arch);
  Activations<T> act;
  forward_impl(arch, params, images.data(), batch, act);
  std::vector<T> dlogits(act.logits.size());
  const double loss = softmax_ce(act.logits.data(), batch, arch.num_outputs, labels, {}, dlogits.data());
  backward_impl(arch, params, act, batch, dlogits, grads, head_only);
  return loss;
}

template double loss_and_gradients<float>(const Architecture&, const Parameters<float>&, std::span<const float>,
                                          std::span<const int>, Parameters<float>&, bool);
template double loss_and_gradients<double>(const Architecture&, const Parameters<double>&,
                                           std::span<const double>, std::span<const int>, Parameters<double>&,
                                           bool);

template <class T>
Parameters<T> convert_parameters(const Parameters<float>& p) {
  Parameters<T> out;
  auto dst = out.tensors();
  const auto src = p.tensors();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i]->assign(src[i]->begin(), src[i]->end());
  return out;
}

template Parameters<float> convert_parameters<float>(const Parameters<float>&);
template Parameters<double> convert_parameters<double>(const Parameters<float>&);

// ---------------------------------------------------------------- training

TrainConfig TrainConfig::standard(int epochs, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = seed;
  cfg.lr_decay_schedule = {{epochs / 2, 0.1f}, {(3 * epochs) / 4, 0.1f}};
  return cfg;
}

float TrainConfig::learning_rate_at(int epoch) const {
  float lr = learning_rate;
  for (const auto& [at, mult] : lr_decay_schedule)
    if (epoch >= at) lr *= mult;
  return lr;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(learning_rate > 0.0f)) throw ConfigError("learning rate must be positive");
  if (!(momentum >= 0.0f && momentum < 1.0f)) throw ConfigError("momentum must be in [0, 1)");
}

OptimizerState make_optimizer_state(const Model& model) {
  return {Parameters<float>::zeros_like(model.arch), 0};
}

void sgd_step(Model& model, const Parameters<float>& gradients, float learning_rate, float momentum,
              OptimizerState& state) {
  auto params = model.params.tensors();
  auto vel = state.velocity.tensors();
  const auto grads = gradients.tensors();
  const std::size_t first = model.freeze_extractor ? Parameters<float>::kExtractorTensors : 0;
  for (std::size_t t = first; t < params.size(); ++t) {
    auto& p = *params[t];
    auto& v = *vel[t];
    const auto& g = *grads[t];
    if (g.size() != p.size() || v.size() != p.size()) throw ShapeError("gradient shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = momentum * v[i] + g[i];
      p[i] -= learning_rate * v[i];
    }
  }
}

void sgd_step(Model& model, const Parameters<float>& gradients, const TrainConfig& cfg, OptimizerState& state) {
  sgd_step(model, gradients, cfg.learning_rate_at(state.epochs_done), cfg.momentum, state);
}

EpochStats train_epoch(Model& model, const LabeledDataset& data, const TrainConfig& cfg, OptimizerState& state) {
  cfg.validate();
  if (data.empty()) throw EmptyInputError("cannot train on an empty dataset");
  if (data.shape != model.arch.input) throw ShapeError("dataset images do not match the model input");
  if (data.num_classes > model.arch.num_outputs) throw LabelRangeError("dataset has more classes than outputs");

  Rng rng(mix_seed(cfg.seed, 0x7a11 + static_cast<std::uint64_t>(state.epochs_done)));
  const auto order = random_permutation(data.size(), rng);
  const float lr = cfg.learning_rate_at(state.epochs_done);
  const std::size_t px = data.shape.pixels();
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);

  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::vector<float> images;
  std::vector<int> labels;
  Parameters<float> grads;
  Activations<float> act;
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t n = std::min(bs, order.size() - start);
    images.resize(n * px);
    labels.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto img = data.image(order[start + k]);
      std::copy(img.begin(), img.end(), images.begin() + k * px);
      labels[k] = data.labels[order[start + k]];
    }
    grads = Parameters<float>::zeros_like(model.arch);
    forward_impl(model.arch, model.params, images.data(), n, act);
    const std::size_t O = model.arch.num_outputs;
    for (std::size_t k = 0; k < n; ++k)
      if (argmax({act.logits.data() + k * O, O}) == labels[k]) ++correct;
    std::vector<float> dlogits(act.logits.size());
    loss_sum += softmax_ce(act.logits.data(), n, O, labels, {}, dlogits.data()) * static_cast<double>(n);
    backward_impl(model.arch, model.params, act, n, dlogits, grads, model.freeze_extractor);
    sgd_step(model, grads, lr, cfg.momentum, state);
  }
  ++state.epochs_done;
  return {loss_sum / static_cast<double>(data.size()), static_cast<double>(correct) / data.size()};
}

EpochStats train_head_epoch(Model& model, const FeatureMatrix& features, std::span<const int> labels,
                            const TrainConfig& cfg, OptimizerState& state, std::span<const float> class_weights) {
  cfg.validate();
  if (features.rows == 0) throw EmptyInputError("cannot train on an empty feature set");
  if (features.rows != labels.size()) throw ShapeError("feature rows and labels differ in count");
  if (features.cols != static_cast<std::size_t>(model.arch.feature_dim)) throw ShapeError("feature width mismatch");

  Rng rng(mix_seed(cfg.seed, 0x7a11 + static_cast<std::uint64_t>(state.epochs_done)));
  const auto order = random_permutation(features.rows, rng);
  const float lr = cfg.learning_rate_at(state.epochs_done);
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t F = features.cols, O = model.arch.num_outputs;

  const bool was_frozen = model.freeze_extractor;
  model.freeze_extractor = true;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::vector<float> z, logits, dlogits;
  std::vector<int> y;
  Parameters<float> grads = Parameters<float>::zeros_like(model.arch);
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t n = std::min(bs, order.size() - start);
    z.resize(n * F);
    y.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto row = features.row(order[start + k]);
      std::copy(row.begin(), row.end(), z.begin() + k * F);
      y[k] = labels[order[start + k]];
    }
    logits.assign(n * O, 0.0f);
    Gemm<float>::nn(z.data(), model.params.head_w.data(), logits.data(), n, F, O);
    add_bias_relu(logits, model.params.head_b, false);
    for (std::size_t k = 0; k < n; ++k)
      if (argmax({logits.data() + k * O, O}) == y[k]) ++correct;
    dlogits.assign(logits.size(), 0.0f);
    loss_sum += softmax_ce(logits.data(), n, O, y, class_weights, dlogits.data()) * static_cast<double>(n);
    std::fill(grads.head_w.begin(), grads.head_w.end(), 0.0f);
    std::fill(grads.head_b.begin(), grads.head_b.end(), 0.0f);
    Gemm<float>::tn(z.data(), dlogits.data(), grads.head_w.data(), n, F, O);
    bias_grad(dlogits, grads.head_b);
    sgd_step(model, grads, lr, cfg.momentum, state);
  }
  model.freeze_extractor = was_frozen;
  ++state.epochs_done;
  return {loss_sum / static_cast<double>(features.rows), static_cast<double>(correct) / features.rows};
}

FeatureMatrix extract_features(const Model& model, const LabeledDataset& data) {
  if (data.shape != model.arch.input) throw ShapeError("dataset images do not match the model input");
  FeatureMatrix out(data.size(), model.arch.feature_dim);
  constexpr std::size_t kChunk = 256;
  const std::size_t px = data.shape.pixels();
  Activations<float> act;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, data.size() - start);
    forward_impl(model.arch, model.params, data.images.data() + start * px, n, act);
    std::copy(act.z.begin(), act.z.end(), out.data.begin() + start * out.cols);
  }
  return out;
}

Model replace_head(const Model& model, int new_num_outputs, std::uint64_t seed) {
  if (new_num_outputs < 1) throw ConfigError("head needs at least one output");
  Model out = model;
  out.arch.num_outputs = new_num_outputs;
  out.params.head_w.assign(static_cast<std::size_t>(model.arch.feature_dim) * new_num_outputs, 0.0f);
  out.params.head_b.assign(new_num_outputs, 0.0f);
  init_head(out.params, out.arch, seed, kReplacementHeadStream);
  return out;
}

int argmax(std::span<const float> row) {
  int best = 0;
  for (std::size_t k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = static_cast<int>(k);
  return best;
}

std::vector<int> predict(const Model& model, std::span<const float> images, std::size_t batch) {
  const auto out = forward(model, images, batch);
  std::vector<int> labels(batch);
  for (std::size_t b = 0; b < batch; ++b) labels[b] = argmax(out.logits.row(b));
  return labels;
}

std::vector<int> predict(const Model& model, const LabeledDataset& data) {
  const auto features = extract_features(model, data);
  const auto logits = head_logits(model, features);
  std::vector<int> labels(data.size());
  for (std::size_t b = 0; b < data.size(); ++b) labels[b] = argmax(logits.row(b));
  return labels;
}

}  // namespace csc
