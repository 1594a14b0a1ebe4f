#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcgan/common.hpp"
#include "qcgan/metrics.hpp"
#include "qcgan/neural.hpp"
#include "qcgan/qgen.hpp"
#include "qcgan/qsim.hpp"

#include "json.hpp"

// Adversarial training: WGAN-GP objective with n_critic critic updates per
// generator update, quantum or classical generator, validation-MMD
// checkpointing and mode-collapse monitoring.

namespace qcgan::gan {

enum class GeneratorKind { Classical, Quantum, QuantumNoisy };

std::string to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(const std::string& s);

struct TrainConfig {
  GeneratorKind kind = GeneratorKind::Classical;
  int n_critic = 5;
  double gp_lambda = 10.0;
  std::size_t batch_size = 64;
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  qsim::NoiseSpec noise;  // applied for QuantumNoisy only
  qgen::CircuitConfig circuit;
  double lr_critic = 1e-4;
  double lr_generator = 1e-4;
  double lr_quantum = 0.02;  // angle updates live on a different scale
  double latent_clamp_sigma = 3.0;
  std::size_t val_samples = 512;  // generated rows per validation MMD estimate

  void validate() const;
};

// Loss went non-finite; message carries the diagnostics.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The trainable generator bundle. Quantum kinds route the latent vector
// through the circuit and refine the measurement vector with the
// post-processor; the classical kind is a plain dense net.
struct Generator {
  GeneratorKind kind = GeneratorKind::Classical;
  qgen::CircuitConfig circuit;
  qsim::NoiseSpec noise;
  Vec theta;
  neural::DiffNet post;  // quantum kinds
  neural::DiffNet net;   // classical kind
  double latent_clamp_sigma = 3.0;
  std::size_t width = 4;

  static Generator make(GeneratorKind kind, const qgen::CircuitConfig& circuit,
                        const qsim::NoiseSpec& noise, double latent_clamp_sigma,
                        std::size_t width, Rng& init_rng);

  std::size_t parameter_count() const;
  Mat sample_latent_batch(std::size_t n, Rng& z_rng) const;
  // Measurement vectors for each latent row (quantum kinds), data-parallel.
  Mat measure_batch(const Mat& z) const;
  Mat generate_batch(std::size_t n, Rng& z_rng) const;
  Mat generate_from_latent(const Mat& z) const;
};

struct CriticLossResult {
  double loss = 0.0;
  double wasserstein = 0.0;    // mean D(fake) - mean D(real)
  double penalty = 0.0;        // unscaled gradient penalty term
  neural::Gradients grads;
};

// WGAN-GP critic loss: mean D(fake) - mean D(real)
//   + lambda * mean((||grad_xhat D(xhat)|| - 1)^2),
// xhat = eps*real + (1-eps)*fake with eps ~ U[0,1] per row. Runs one
// spectral-norm power iteration before evaluating.
CriticLossResult critic_loss(neural::DiffNet& critic, const Mat& real, const Mat& fake,
                             double gp_lambda, Rng& rng);

struct GeneratorLossResult {
  double loss = 0.0;
  Mat d_fake;  // d loss / d fake rows
};

// loss = -mean(D(fake)); gradient flows back into the generator outputs.
GeneratorLossResult generator_loss(neural::DiffNet& critic, const Mat& fake);

struct EpochStats {
  double d_loss = 0.0;
  double g_loss = 0.0;
  double val_mmd = 0.0;
  double min_feature_std = 0.0;
};

struct TrainTrace {
  std::vector<EpochStats> epochs;
  double initial_mmd = 0.0;  // validation MMD before the first update
  int best_epoch = 0;        // 0 = initial parameters
  double best_mmd = 0.0;
  std::size_t critic_steps = 0;
  std::size_t generator_steps = 0;
  bool diverged = false;
  std::string divergence_message;
};

struct Checkpoint {
  GeneratorKind kind = GeneratorKind::Classical;
  qgen::CircuitConfig circuit;
  qsim::NoiseSpec noise;
  Vec theta, post_params, net_params;
  double latent_clamp_sigma = 3.0;
  std::size_t width = 4;
  int epoch = 0;
  double val_mmd = 0.0;
  std::uint64_t val_seed = 0;  // regenerates the exact validation batch
  std::uint64_t train_seed = 0;
  std::uint64_t config_hash = 0;

  nlohmann::json to_json() const;
  static Checkpoint from_json(const nlohmann::json& j);
  static Checkpoint capture(const Generator& gen, int epoch, double val_mmd,
                            std::uint64_t val_seed, std::uint64_t train_seed);
  Generator restore() const;
};

struct Datasets {
  Mat train;
  Mat val;
};

struct TrainResult {
  TrainTrace trace;
  Checkpoint best;
  Checkpoint final_state;
};

// Deterministic under (config, data): n_critic critic steps per generator
// step, per-epoch validation MMD, best checkpoint at the minimum validation
// MMD. Divergence stops early with the partial trace preserved.
TrainResult train(const TrainConfig& config, const Datasets& data);

struct CollapseReport {
  double threshold = 0.05;
  std::vector<int> flagged_epochs;  // 1-based epochs with min feature std below
};

CollapseReport mode_collapse_monitor(const TrainTrace& trace, double threshold = 0.05);

void write_trace_csv(const TrainTrace& trace, const std::string& path);

}  // namespace qcgan::gan
