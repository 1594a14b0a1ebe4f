#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qcgan/common.hpp"

// Minimal differentiable dense-network stack: feed-forward chains with exact
// reverse-mode gradients for both parameters and inputs, optional spectral
// normalization and dropout, and a standard Adam optimizer.

namespace qcgan::neural {

enum class Activation { Identity, LeakyRelu, Tanh, Sigmoid };

struct LayerConfig {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation act = Activation::Identity;
  double leaky_slope = 0.2;
  bool spectral_norm = false;
  double dropout_rate = 0.0;  // applied after the activation, train mode only
};

struct DenseLayer {
  LayerConfig cfg;
  Mat W;  // out x in
  Vec b;  // out
  // Spectral-norm power-iteration state; meaningful only with spectral_norm.
  Vec u;  // out
  Vec v;  // in

  std::size_t parameter_count() const { return W.data.size() + b.size(); }
};

struct DiffNet {
  std::vector<DenseLayer> layers;
  // Bumped whenever parameters change; guards against stale forward caches.
  std::uint64_t version = 0;

  std::size_t parameter_count() const;
  std::size_t input_width() const { return layers.front().cfg.in; }
  std::size_t output_width() const { return layers.back().cfg.out; }

  Vec parameters() const;
  void set_parameters(std::span<const double> flat);

  void init_glorot(Rng& rng);

  // Architectures used by the experiments.
  // WGAN critic, 4 -> 128 -> 64 -> 1: LeakyReLU(0.2), spectral norm, linear
  // head; 8,961 parameters.
  static DiffNet critic(std::size_t input_width = 4);
  // Same body with a sigmoid head and dropout 0.3, for the vanilla-GAN mode.
  static DiffNet critic_vanilla(std::size_t input_width = 4);
  // Measurement refiner, 4 -> 32 -> 4 with tanh output; 292 parameters.
  static DiffNet post_processor(std::size_t width = 4);
  // Classical baseline generator, 4 -> 33 -> 33 -> 4 with tanh output;
  // 1,423 parameters (within 1% of the 1,412 budget).
  static DiffNet classical_generator(std::size_t width = 4);
};

enum class Mode { Train, Eval };

struct ForwardCache {
  std::uint64_t net_version = 0;
  Mode mode = Mode::Eval;
  std::vector<Mat> inputs;   // per layer: the layer's input batch
  std::vector<Mat> preact;   // per layer: pre-activation batch
  std::vector<Mat> deriv;    // per layer: activation derivative * dropout mask
  std::vector<Mat> eff_w;    // per layer: effective (possibly normalized) weight
  std::vector<double> sigma; // per layer: spectral norm estimate (1 when off)
  std::vector<Vec> sn_u, sn_v;
};

// Forward pass over a batch (rows = samples). Dropout draws from rng in train
// mode (rng may be null in eval mode). Spectral-norm layers use their stored
// (u, v); call spectral_normalize to advance the power iteration.
Mat forward(const DiffNet& net, const Mat& input, Mode mode, Rng* rng,
            ForwardCache* cache = nullptr);

struct Gradients {
  std::vector<Mat> dW;
  std::vector<Vec> db;
  Mat dInput;

  Vec flat() const;  // same layout as DiffNet::parameters()
  void add_scaled(const Gradients& other, double scale);
};

// Exact reverse-mode gradients for the forward call that filled `cache`.
Gradients backward(const DiffNet& net, const ForwardCache& cache, const Mat& dOut);

// One power-iteration step on (u, v). Zero weight matrices are left alone
// (warns once on stderr). Returns the current sigma estimate.
double spectral_normalize(DenseLayer& layer);
double spectral_sigma(const DenseLayer& layer);  // u^T W v with stored u, v
Mat effective_weight(const DenseLayer& layer);

struct GradNormPenalty {
  double value = 0.0;     // mean over rows of (||d out/d in||_2 - 1)^2
  Vec per_row_norm;
  Gradients grads;        // exact parameter gradients of `value`
};

// Gradient-norm penalty for scalar-output nets built from piecewise-linear
// activations (LeakyReLU/Identity); throws UsageError otherwise. Dropout is
// ignored on this path.
GradNormPenalty grad_norm_penalty(const DiffNet& net, const Mat& input);

struct AdamState {
  Vec m, v;
  std::uint64_t step = 0;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n, double lr_ = 1e-4, double beta1_ = 0.5,
                     double beta2_ = 0.9, double eps_ = 1e-8)
      : m(n, 0.0), v(n, 0.0), lr(lr_), beta1(beta1_), beta2(beta2_), eps(eps_) {}
};

// Bias-corrected Adam update, in place. Non-finite gradients abort the step
// with a UsageError before touching params or state.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace qcgan::neural
