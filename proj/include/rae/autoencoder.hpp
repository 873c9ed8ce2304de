#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rae/errors.hpp"
#include "rae/image.hpp"
#include "rae/rng.hpp"
#include "rae/stats.hpp"

namespace rae {

enum class Activation { kLinear, kRelu, kSigmoid };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kLinear: return "linear";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "?";
}

inline Activation activation_from_name(const std::string& name) {
  if (name == "linear") return Activation::kLinear;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw InvalidInput("unknown activation: " + name);
}

struct TrainConfig {
  double learning_rate = 1.0;
  int epochs = 120;
  int batch_size = 16;
  std::uint64_t seed = 0;
  double weight_init_scale = 1.0;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw InvalidInput("TrainConfig: learning_rate must be finite and nonnegative");
    if (epochs <= 0) throw InvalidInput("TrainConfig: epochs must be positive");
    if (batch_size <= 0) throw InvalidInput("TrainConfig: batch_size must be positive");
    if (!(weight_init_scale > 0.0)) throw InvalidInput("TrainConfig: weight_init_scale must be positive");
  }
};

struct Gradients {
  std::vector<std::vector<double>> weights;  // per transition, row-major [out][in]
  std::vector<std::vector<double>> biases;   // per non-input layer
};

// Symmetric fully-connected autoencoder. Default construction is zero
// weights; call init_weights (or make_autoencoder) before training.
class Autoencoder {
 public:
  Autoencoder() = default;

  Autoencoder(int width, int height, std::vector<int> layer_sizes = {},
              std::vector<Activation> activations = {})
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw InvalidInput("Autoencoder: image dimensions must be positive");
    const int d = width * height;
    if (layer_sizes.empty()) {
      const int h1 = std::max(1, d / 4);
      const int h2 = std::max(1, d / 16);
      layer_sizes = {d, h1, h2, h1, d};
    }
    if (layer_sizes.front() != d || layer_sizes.back() != d)
      throw InvalidInput("Autoencoder: first/last layer size must equal width*height");
    for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
      if (layer_sizes[i] <= 0) throw InvalidInput("Autoencoder: layer sizes must be positive");
      if (layer_sizes[i] != layer_sizes[layer_sizes.size() - 1 - i])
        throw InvalidInput("Autoencoder: layer_sizes must be palindromic");
    }
    layer_sizes_ = std::move(layer_sizes);
    const std::size_t transitions = layer_sizes_.size() - 1;
    if (activations.empty()) {
      activations.assign(transitions, Activation::kRelu);
      activations.back() = Activation::kSigmoid;
    }
    if (activations.size() != transitions)
      throw InvalidInput("Autoencoder: need one activation per layer transition");
    activations_ = std::move(activations);
    weights_.resize(transitions);
    biases_.resize(transitions);
    for (std::size_t l = 0; l < transitions; ++l) {
      weights_[l].assign(static_cast<std::size_t>(layer_sizes_[l + 1]) * layer_sizes_[l], 0.0);
      biases_[l].assign(static_cast<std::size_t>(layer_sizes_[l + 1]), 0.0);
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int input_dim() const { return layer_sizes_.empty() ? 0 : layer_sizes_.front(); }
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  const std::vector<Activation>& activations() const { return activations_; }
  const std::vector<std::vector<double>>& weights() const { return weights_; }
  const std::vector<std::vector<double>>& biases() const { return biases_; }
  std::vector<std::vector<double>>& mutable_weights() { return weights_; }
  std::vector<std::vector<double>>& mutable_biases() { return biases_; }

  int id = 0;  // 1-based position in its set, 0 when unattached
  Normalizer normalizer;

  // Uniform init in [-s,+s] with s = scale/sqrt(fan_in); biases start at 0.
  void init_weights(std::uint64_t seed, double scale) {
    Rng rng(derive_seed(seed, "weight-init"));
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const double s = scale / std::sqrt(static_cast<double>(layer_sizes_[l]));
      for (double& w : weights_[l]) w = rng.uniform(-s, s);
      for (double& b : biases_[l]) b = 0.0;
    }
  }

  void check_input(const Image& img) const {
    if (img.width != width_ || img.height != height_)
      throw ShapeError("Autoencoder: input is " + std::to_string(img.width) + "x" +
                       std::to_string(img.height) + ", expected " + std::to_string(width_) + "x" +
                       std::to_string(height_));
  }

  // Forward pass; fills one activation vector per layer (activations[0] is
  // the input) and matching preactivations (preacts[0] unused).
  void forward(std::span<const double> x, std::vector<std::vector<double>>& acts,
               std::vector<std::vector<double>>& preacts) const {
    const std::size_t layers = layer_sizes_.size();
    acts.resize(layers);
    preacts.resize(layers);
    acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l + 1 < layers; ++l) {
      const int n_out = layer_sizes_[l + 1];
      const int n_in = layer_sizes_[l];
      preacts[l + 1].resize(static_cast<std::size_t>(n_out));
      acts[l + 1].resize(static_cast<std::size_t>(n_out));
      const double* w = weights_[l].data();
      const double* in = acts[l].data();
      for (int i = 0; i < n_out; ++i) {
        const double* row = w + static_cast<std::size_t>(i) * n_in;
        double z = biases_[l][static_cast<std::size_t>(i)];
        for (int j = 0; j < n_in; ++j) z += row[j] * in[j];
        preacts[l + 1][static_cast<std::size_t>(i)] = z;
        acts[l + 1][static_cast<std::size_t>(i)] = apply_activation(activations_[l], z);
      }
    }
  }

  Image reconstruct(const Image& img) const {
    check_input(img);
    std::vector<std::vector<double>> acts, preacts;
    forward(img.pixels, acts, preacts);
    Image out(width_, height_);
    out.pixels = std::move(acts.back());
    return out;
  }

  bool parameters_finite() const {
    for (const auto& layer : weights_)
      for (const double w : layer)
        if (!std::isfinite(w)) return false;
    for (const auto& layer : biases_)
      for (const double b : layer)
        if (!std::isfinite(b)) return false;
    return true;
  }

  static double apply_activation(Activation a, double z) {
    switch (a) {
      case Activation::kLinear: return z;
      case Activation::kRelu: return z > 0.0 ? z : 0.0;
      case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-z));
    }
    return z;
  }

  static double activation_derivative(Activation a, double z, double value) {
    switch (a) {
      case Activation::kLinear: return 1.0;
      case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
      case Activation::kSigmoid: return value * (1.0 - value);
    }
    return 1.0;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<int> layer_sizes_;
  std::vector<Activation> activations_;
  std::vector<std::vector<double>> weights_;
  std::vector<std::vector<double>> biases_;
};

inline Autoencoder make_autoencoder(int width, int height, std::uint64_t seed,
                                    double init_scale = 1.0, std::vector<int> layer_sizes = {},
                                    std::vector<Activation> activations = {}) {
  Autoencoder ae(width, height, std::move(layer_sizes), std::move(activations));
  ae.init_weights(seed, init_scale);
  return ae;
}

// Region-summed reconstruction error: sum over the region of the absolute
// per-pixel difference between input and reconstruction.
inline double reconstruction_error(const Image& img, const Image& recon) {
  require_same_shape(img, recon, "reconstruction_error");
  double acc = 0.0;
  for (std::size_t p = 0; p < img.pixels.size(); ++p) acc += std::fabs(img.pixels[p] - recon.pixels[p]);
  return acc;
}

inline double reconstruction_error(const Image& img, const Image& recon,
                                   std::span<const std::size_t> region) {
  require_same_shape(img, recon, "reconstruction_error");
  double acc = 0.0;
  for (const std::size_t p : region) {
    if (p >= img.pixels.size())
      throw InvalidInput("reconstruction_error: region pixel index out of range");
    acc += std::fabs(img.pixels[p] - recon.pixels[p]);
  }
  return acc;
}

// Full-image error of the AE's own reconstruction.
inline double reconstruction_error(const Autoencoder& ae, const Image& img) {
  return reconstruction_error(img, ae.reconstruct(img));
}

namespace detail {

// Scratch buffers reused across gradient evaluations in a training run.
struct BackpropWorkspace {
  std::vector<std::vector<double>> acts, preacts, deltas;
  std::vector<std::vector<double>> grad_w, grad_b;

  void reset_gradients(const Autoencoder& ae) {
    const auto& sizes = ae.layer_sizes();
    grad_w.resize(sizes.size() - 1);
    grad_b.resize(sizes.size() - 1);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      grad_w[l].assign(static_cast<std::size_t>(sizes[l + 1]) * sizes[l], 0.0);
      grad_b[l].assign(static_cast<std::size_t>(sizes[l + 1]), 0.0);
    }
  }
};

// Backprop for the mean-squared-error-per-pixel training loss
//   L = D^-1 * sum_p (out_p - x_p)^2.
// Accumulates into ws.grad_w / ws.grad_b.
inline void accumulate_gradient(const Autoencoder& ae, const Image& img, BackpropWorkspace& ws) {
  ae.check_input(img);
  const auto& sizes = ae.layer_sizes();
  const std::size_t layers = sizes.size();
  ae.forward(img.pixels, ws.acts, ws.preacts);

  ws.deltas.resize(layers);
  const int d = sizes.back();
  ws.deltas[layers - 1].resize(static_cast<std::size_t>(d));
  const Activation out_act = ae.activations().back();
  for (int p = 0; p < d; ++p) {
    const double out = ws.acts[layers - 1][static_cast<std::size_t>(p)];
    const double err = 2.0 / d * (out - img.pixels[static_cast<std::size_t>(p)]);
    ws.deltas[layers - 1][static_cast<std::size_t>(p)] =
        err * Autoencoder::activation_derivative(out_act, ws.preacts[layers - 1][static_cast<std::size_t>(p)], out);
  }

  for (std::size_t l = layers - 1; l >= 1; --l) {
    const int n_out = sizes[l];
    const int n_in = sizes[l - 1];
    const double* delta = ws.deltas[l].data();
    const double* in = ws.acts[l - 1].data();
    double* gw = ws.grad_w[l - 1].data();
    double* gb = ws.grad_b[l - 1].data();
    for (int i = 0; i < n_out; ++i) {
      const double di = delta[i];
      gb[i] += di;
      double* grow = gw + static_cast<std::size_t>(i) * n_in;
      for (int j = 0; j < n_in; ++j) grow[j] += di * in[j];
    }
    if (l >= 2) {
      ws.deltas[l - 1].assign(static_cast<std::size_t>(n_in), 0.0);
      const double* w = ae.weights()[l - 1].data();
      double* dprev = ws.deltas[l - 1].data();
      for (int i = 0; i < n_out; ++i) {
        const double di = delta[i];
        const double* row = w + static_cast<std::size_t>(i) * n_in;
        for (int j = 0; j < n_in; ++j) dprev[j] += row[j] * di;
      }
      const Activation act = ae.activations()[l - 2];
      for (int j = 0; j < n_in; ++j)
        dprev[j] *= Autoencoder::activation_derivative(act, ws.preacts[l - 1][static_cast<std::size_t>(j)],
                                                       ws.acts[l - 1][static_cast<std::size_t>(j)]);
    }
  }
}

}  // namespace detail

// Gradient of the training loss w.r.t. every weight and bias.
inline Gradients gradient(const Autoencoder& ae, const Image& img) {
  detail::BackpropWorkspace ws;
  ws.reset_gradients(ae);
  detail::accumulate_gradient(ae, img, ws);
  return Gradients{std::move(ws.grad_w), std::move(ws.grad_b)};
}

// Training loss (mean squared error per pixel) of one image.
inline double training_loss(const Autoencoder& ae, const Image& img) {
  const Image recon = ae.reconstruct(img);
  double acc = 0.0;
  for (std::size_t p = 0; p < img.pixels.size(); ++p) {
    const double e = recon.pixels[p] - img.pixels[p];
    acc += e * e;
  }
  return acc / static_cast<double>(img.pixels.size());
}

// Plain mini-batch SGD over shuffled epochs. Deterministic given cfg.seed;
// learning_rate 0 leaves the parameters untouched.
inline void fit(Autoencoder& ae, std::span<const Image> images, const TrainConfig& cfg) {
  cfg.validate();
  if (images.empty()) throw InvalidInput("fit: training image list is empty");
  for (const Image& img : images) ae.check_input(img);

  Rng rng(derive_seed(cfg.seed, "sgd-shuffle"));
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  detail::BackpropWorkspace ws;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      ws.reset_gradients(ae);
      for (std::size_t k = start; k < stop; ++k)
        detail::accumulate_gradient(ae, images[order[k]], ws);
      const double step = cfg.learning_rate / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < ae.weights().size(); ++l) {
        double* w = ae.mutable_weights()[l].data();
        const double* gw = ws.grad_w[l].data();
        const std::size_t nw = ae.weights()[l].size();
        for (std::size_t i = 0; i < nw; ++i) w[i] -= step * gw[i];
        double* b = ae.mutable_biases()[l].data();
        const double* gb = ws.grad_b[l].data();
        const std::size_t nb = ae.biases()[l].size();
        for (std::size_t i = 0; i < nb; ++i) b[i] -= step * gb[i];
      }
    }
  }
  if (!ae.parameters_finite())
    throw NumericError("fit: training diverged to non-finite parameters");
}

inline Autoencoder train(Autoencoder ae, std::span<const Image> images, const TrainConfig& cfg) {
  fit(ae, images, cfg);
  return ae;
}

}  // namespace rae
