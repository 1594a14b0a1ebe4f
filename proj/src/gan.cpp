#include "qcgan/gan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace qcgan::gan {

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::Classical: return "classical";
    case GeneratorKind::Quantum: return "qcgan";
    case GeneratorKind::QuantumNoisy: return "qcgan-noisy";
  }
  return "unknown";
}

GeneratorKind generator_kind_from_string(const std::string& s) {
  if (s == "classical") return GeneratorKind::Classical;
  if (s == "qcgan" || s == "quantum") return GeneratorKind::Quantum;
  if (s == "qcgan-noisy" || s == "quantum_noisy") return GeneratorKind::QuantumNoisy;
  throw ConfigError("unknown generator kind '" + s +
                    "' (expected classical|qcgan|qcgan-noisy)");
}

void TrainConfig::validate() const {
  if (n_critic < 1) throw ConfigError("n_critic must be >= 1");
  if (gp_lambda < 0.0) throw ConfigError("gp_lambda must be >= 0");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  noise.validate();
  circuit.validate();
  if (latent_clamp_sigma <= 0.0) throw ConfigError("latent_clamp_sigma must be > 0");
  if (val_samples < 2) throw ConfigError("val_samples must be >= 2");
}

Generator Generator::make(GeneratorKind kind, const qgen::CircuitConfig& circuit,
                          const qsim::NoiseSpec& noise, double latent_clamp_sigma,
                          std::size_t width, Rng& init_rng) {
  Generator gen;
  gen.kind = kind;
  gen.circuit = circuit;
  gen.noise = kind == GeneratorKind::QuantumNoisy ? noise : qsim::NoiseSpec{};
  gen.latent_clamp_sigma = latent_clamp_sigma;
  gen.width = width;
  if (kind == GeneratorKind::Classical) {
    gen.net = neural::DiffNet::classical_generator(width);
    gen.net.init_glorot(init_rng);
  } else {
    if (std::size_t(circuit.num_qubits) != width)
      throw ConfigError("quantum generator: circuit qubits (" +
                        std::to_string(circuit.num_qubits) +
                        ") must equal the feature width (" + std::to_string(width) + ")");
    gen.theta = qgen::init_params(circuit, init_rng);
    gen.post = neural::DiffNet::post_processor(width);
    gen.post.init_glorot(init_rng);
  }
  return gen;
}

std::size_t Generator::parameter_count() const {
  if (kind == GeneratorKind::Classical) return net.parameter_count();
  return theta.size() + post.parameter_count();
}

Mat Generator::sample_latent_batch(std::size_t n, Rng& z_rng) const {
  const std::size_t dim =
      kind == GeneratorKind::Classical ? width : std::size_t(circuit.num_qubits);
  Mat z(n, dim);
  for (std::size_t r = 0; r < n; ++r) {
    const Vec row = qgen::sample_latent(int(dim), latent_clamp_sigma, z_rng);
    for (std::size_t c = 0; c < dim; ++c) z(r, c) = row[c];
  }
  return z;
}

Mat Generator::measure_batch(const Mat& z) const {
  Mat out(z.rows, std::size_t(circuit.num_qubits));
  parallel_for(z.rows, [&](std::size_t r) {
    const Vec x = qgen::generate(circuit, theta, z.row(r), noise);
    for (std::size_t c = 0; c < out.cols; ++c) out(r, c) = x[c];
  });
  return out;
}

Mat Generator::generate_from_latent(const Mat& z) const {
  if (kind == GeneratorKind::Classical)
    return neural::forward(net, z, neural::Mode::Eval, nullptr);
  const Mat measured = measure_batch(z);
  return neural::forward(post, measured, neural::Mode::Eval, nullptr);
}

Mat Generator::generate_batch(std::size_t n, Rng& z_rng) const {
  return generate_from_latent(sample_latent_batch(n, z_rng));
}

CriticLossResult critic_loss(neural::DiffNet& critic, const Mat& real, const Mat& fake,
                             double gp_lambda, Rng& rng) {
  if (real.cols != fake.cols)
    throw UsageError("critic_loss: real/fake widths differ");
  if (real.rows == 0 || fake.rows == 0)
    throw UsageError("critic_loss: empty batch");
  for (auto& layer : critic.layers)
    if (layer.cfg.spectral_norm) neural::spectral_normalize(layer);

  neural::ForwardCache cache_fake, cache_real;
  const Mat d_fake = neural::forward(critic, fake, neural::Mode::Train, &rng, &cache_fake);
  const Mat d_real = neural::forward(critic, real, neural::Mode::Train, &rng, &cache_real);
  const double mean_fake = mean_of(d_fake.data);
  const double mean_real = mean_of(d_real.data);

  CriticLossResult result;
  result.wasserstein = mean_fake - mean_real;

  Mat ones_fake(fake.rows, 1, 1.0 / double(fake.rows));
  Mat ones_real(real.rows, 1, -1.0 / double(real.rows));
  result.grads = neural::backward(critic, cache_fake, ones_fake);
  result.grads.add_scaled(neural::backward(critic, cache_real, ones_real), 1.0);

  if (gp_lambda > 0.0) {
    const std::size_t rows = std::min(real.rows, fake.rows);
    Mat interp(rows, real.cols);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double eps = uni(rng);
      for (std::size_t c = 0; c < real.cols; ++c)
        interp(r, c) = eps * real(r, c) + (1.0 - eps) * fake(r, c);
    }
    const auto penalty = neural::grad_norm_penalty(critic, interp);
    result.penalty = penalty.value;
    result.grads.add_scaled(penalty.grads, gp_lambda);
  }
  result.loss = result.wasserstein + gp_lambda * result.penalty;
  if (!std::isfinite(result.loss))
    throw DivergenceError("critic loss is not finite (wasserstein=" +
                          std::to_string(result.wasserstein) +
                          ", penalty=" + std::to_string(result.penalty) + ")");
  return result;
}

GeneratorLossResult generator_loss(neural::DiffNet& critic, const Mat& fake) {
  if (fake.rows == 0) throw UsageError("generator_loss: empty batch");
  neural::ForwardCache cache;
  const Mat scores = neural::forward(critic, fake, neural::Mode::Eval, nullptr, &cache);
  GeneratorLossResult result;
  result.loss = -mean_of(scores.data);
  Mat d_out(fake.rows, 1, -1.0 / double(fake.rows));
  result.d_fake = neural::backward(critic, cache, d_out).dInput;
  if (!std::isfinite(result.loss))
    throw DivergenceError("generator loss is not finite");
  return result;
}

namespace {

double column_std(const Mat& m, std::size_t col) {
  double mean = 0.0;
  for (std::size_t r = 0; r < m.rows; ++r) mean += m(r, col);
  mean /= double(m.rows);
  double var = 0.0;
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double d = m(r, col) - mean;
    var += d * d;
  }
  return std::sqrt(var / double(m.rows));
}

double min_feature_std(const Mat& m) {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < m.cols; ++c) lo = std::min(lo, column_std(m, c));
  return lo;
}

nlohmann::json circuit_to_json(const qgen::CircuitConfig& c) {
  const char* rot = c.rotations == qgen::RotationSet::RxRz
                        ? "rx_rz"
                        : (c.rotations == qgen::RotationSet::RyRz ? "ry_rz" : "ry_only");
  return {{"num_qubits", c.num_qubits},
          {"num_blocks", c.num_blocks},
          {"layers_per_block", c.layers_per_block},
          {"rotations", rot}};
}

qgen::CircuitConfig circuit_from_json(const nlohmann::json& j) {
  qgen::CircuitConfig c;
  c.num_qubits = j.at("num_qubits").get<int>();
  c.num_blocks = j.at("num_blocks").get<int>();
  c.layers_per_block = j.at("layers_per_block").get<int>();
  const std::string rot = j.at("rotations").get<std::string>();
  if (rot == "rx_rz") c.rotations = qgen::RotationSet::RxRz;
  else if (rot == "ry_rz") c.rotations = qgen::RotationSet::RyRz;
  else if (rot == "ry_only") c.rotations = qgen::RotationSet::RyOnly;
  else throw ConfigError("unknown rotation set '" + rot + "'");
  return c;
}

nlohmann::json noise_to_json(const qsim::NoiseSpec& n) {
  return {{"p_depolarizing", n.p_depolarizing},
          {"p_bitflip", n.p_bitflip},
          {"gamma_amplitude_damping", n.gamma_amplitude_damping}};
}

qsim::NoiseSpec noise_from_json(const nlohmann::json& j) {
  qsim::NoiseSpec n;
  n.p_depolarizing = j.value("p_depolarizing", 0.0);
  n.p_bitflip = j.value("p_bitflip", 0.0);
  n.gamma_amplitude_damping = j.value("gamma_amplitude_damping", 0.0);
  n.validate();
  return n;
}

}  // namespace

nlohmann::json Checkpoint::to_json() const {
  return {{"format_version", 1},
          {"kind", gan::to_string(kind)},
          {"circuit", circuit_to_json(circuit)},
          {"noise", noise_to_json(noise)},
          {"theta", theta},
          {"post_params", post_params},
          {"net_params", net_params},
          {"latent_clamp_sigma", latent_clamp_sigma},
          {"width", width},
          {"epoch", epoch},
          {"val_mmd", val_mmd},
          {"val_seed", val_seed},
          {"train_seed", train_seed},
          {"config_hash", config_hash}};
}

Checkpoint Checkpoint::from_json(const nlohmann::json& j) {
  if (j.value("format_version", 0) != 1)
    throw DataError("checkpoint: unsupported format_version");
  Checkpoint cp;
  cp.kind = generator_kind_from_string(j.at("kind").get<std::string>());
  cp.circuit = circuit_from_json(j.at("circuit"));
  cp.noise = noise_from_json(j.at("noise"));
  cp.theta = j.at("theta").get<Vec>();
  cp.post_params = j.at("post_params").get<Vec>();
  cp.net_params = j.at("net_params").get<Vec>();
  cp.latent_clamp_sigma = j.at("latent_clamp_sigma").get<double>();
  cp.width = j.at("width").get<std::size_t>();
  cp.epoch = j.at("epoch").get<int>();
  cp.val_mmd = j.at("val_mmd").get<double>();
  cp.val_seed = j.at("val_seed").get<std::uint64_t>();
  cp.train_seed = j.at("train_seed").get<std::uint64_t>();
  cp.config_hash = j.at("config_hash").get<std::uint64_t>();
  return cp;
}

Checkpoint Checkpoint::capture(const Generator& gen, int epoch, double val_mmd,
                               std::uint64_t val_seed, std::uint64_t train_seed) {
  Checkpoint cp;
  cp.kind = gen.kind;
  cp.circuit = gen.circuit;
  cp.noise = gen.noise;
  cp.theta = gen.theta;
  if (!gen.post.layers.empty()) cp.post_params = gen.post.parameters();
  if (!gen.net.layers.empty()) cp.net_params = gen.net.parameters();
  cp.latent_clamp_sigma = gen.latent_clamp_sigma;
  cp.width = gen.width;
  cp.epoch = epoch;
  cp.val_mmd = val_mmd;
  cp.val_seed = val_seed;
  cp.train_seed = train_seed;
  return cp;
}

Generator Checkpoint::restore() const {
  Rng dummy(0);
  Generator gen = Generator::make(kind, circuit, noise, latent_clamp_sigma, width, dummy);
  if (kind == GeneratorKind::Classical) {
    gen.net.set_parameters(net_params);
  } else {
    gen.theta = theta;
    gen.post.set_parameters(post_params);
  }
  return gen;
}

TrainResult train(const TrainConfig& config, const Datasets& data) {
  config.validate();
  if (data.train.rows < config.batch_size * std::size_t(config.n_critic))
    throw DataError("train: not enough training rows for one critic group (" +
                    std::to_string(data.train.rows) + " rows, need >= " +
                    std::to_string(config.batch_size * std::size_t(config.n_critic)) + ")");
  if (data.val.rows < 2) throw DataError("train: validation split too small");
  const std::size_t width = data.train.cols;

  Rng init_rng(mix_seed(config.seed, 1));
  Rng data_rng(mix_seed(config.seed, 2));
  Rng z_rng(mix_seed(config.seed, 3));
  Rng gp_rng(mix_seed(config.seed, 4));

  neural::DiffNet critic = neural::DiffNet::critic(width);
  critic.init_glorot(init_rng);
  Generator gen = Generator::make(config.kind, config.circuit, config.noise,
                                  config.latent_clamp_sigma, width, init_rng);

  neural::AdamState critic_adam(critic.parameter_count(), config.lr_critic);
  neural::AdamState net_adam, post_adam, theta_adam;
  if (config.kind == GeneratorKind::Classical) {
    net_adam = neural::AdamState(gen.net.parameter_count(), config.lr_generator);
  } else {
    post_adam = neural::AdamState(gen.post.parameter_count(), config.lr_generator);
    theta_adam = neural::AdamState(gen.theta.size(), config.lr_quantum);
  }

  // Fixed validation subsample; per-epoch seeds regenerate the fake side.
  const Mat val_real = metrics::take_rows(
      data.val,
      metrics::subsample_indices(data.val.rows, config.val_samples,
                                 mix_seed(config.seed, 5)));
  auto epoch_val_seed = [&](int epoch) { return mix_seed(config.seed, 1000 + epoch); };
  auto validate_mmd = [&](int epoch, Mat* fake_out) {
    Rng val_rng(epoch_val_seed(epoch));
    Mat fake = gen.generate_batch(config.val_samples, val_rng);
    const double v = metrics::mmd(fake, val_real);
    if (fake_out) *fake_out = std::move(fake);
    return v;
  };

  TrainResult result;
  TrainTrace& trace = result.trace;
  trace.initial_mmd = validate_mmd(0, nullptr);
  result.best = Checkpoint::capture(gen, 0, trace.initial_mmd, epoch_val_seed(0),
                                    config.seed);
  trace.best_epoch = 0;
  trace.best_mmd = trace.initial_mmd;

  std::vector<std::size_t> order(data.train.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n_batches = data.train.rows / config.batch_size;
  const std::size_t groups = n_batches / std::size_t(config.n_critic);

  Vec critic_flat = critic.parameters();
  Vec gen_flat;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), data_rng);
    std::size_t cursor = 0;
    Vec d_losses, g_losses;
    try {
      for (std::size_t group = 0; group < groups; ++group) {
        for (int step = 0; step < config.n_critic; ++step) {
          Mat real(config.batch_size, width);
          for (std::size_t r = 0; r < config.batch_size; ++r, ++cursor)
            for (std::size_t c = 0; c < width; ++c)
              real(r, c) = data.train(order[cursor], c);
          const Mat fake = gen.generate_batch(config.batch_size, z_rng);
          const auto closs = critic_loss(critic, real, fake, config.gp_lambda, gp_rng);
          critic_flat = critic.parameters();
          neural::adam_step(critic_flat, closs.grads.flat(), critic_adam);
          critic.set_parameters(critic_flat);
          d_losses.push_back(closs.loss);
          ++trace.critic_steps;
        }
        // generator step on fresh latents
        const Mat z = gen.sample_latent_batch(config.batch_size, z_rng);
        if (config.kind == GeneratorKind::Classical) {
          neural::ForwardCache cache;
          const Mat fake = neural::forward(gen.net, z, neural::Mode::Eval, nullptr, &cache);
          const auto gloss = generator_loss(critic, fake);
          const auto grads = neural::backward(gen.net, cache, gloss.d_fake);
          gen_flat = gen.net.parameters();
          neural::adam_step(gen_flat, grads.flat(), net_adam);
          gen.net.set_parameters(gen_flat);
          g_losses.push_back(gloss.loss);
        } else {
          const Mat measured = gen.measure_batch(z);
          neural::ForwardCache cache;
          const Mat fake =
              neural::forward(gen.post, measured, neural::Mode::Eval, nullptr, &cache);
          const auto gloss = generator_loss(critic, fake);
          const auto post_grads = neural::backward(gen.post, cache, gloss.d_fake);
          const Vec theta_grad = qgen::parameter_shift_grad_batch(
              gen.circuit, gen.theta, z, gen.noise, post_grads.dInput);
          gen_flat = gen.post.parameters();
          neural::adam_step(gen_flat, post_grads.flat(), post_adam);
          gen.post.set_parameters(gen_flat);
          neural::adam_step(gen.theta, theta_grad, theta_adam);
          g_losses.push_back(gloss.loss);
        }
        ++trace.generator_steps;
      }
    } catch (const DivergenceError& e) {
      trace.diverged = true;
      trace.divergence_message = e.what();
    }

    EpochStats stats;
    stats.d_loss = mean_of(d_losses);
    stats.g_loss = mean_of(g_losses);
    Mat fake_val;
    stats.val_mmd = validate_mmd(int(epoch), &fake_val);
    stats.min_feature_std = min_feature_std(fake_val);
    trace.epochs.push_back(stats);

    if (stats.val_mmd < trace.best_mmd) {
      trace.best_mmd = stats.val_mmd;
      trace.best_epoch = int(epoch);
      result.best = Checkpoint::capture(gen, int(epoch), stats.val_mmd,
                                        epoch_val_seed(int(epoch)), config.seed);
    }
    if (trace.diverged) break;
  }

  result.final_state = Checkpoint::capture(
      gen, int(trace.epochs.size()),
      trace.epochs.empty() ? trace.initial_mmd : trace.epochs.back().val_mmd,
      epoch_val_seed(int(trace.epochs.size())), config.seed);
  return result;
}

CollapseReport mode_collapse_monitor(const TrainTrace& trace, double threshold) {
  if (trace.epochs.empty())
    throw UsageError("mode_collapse_monitor: trace has no epochs");
  CollapseReport report;
  report.threshold = threshold;
  for (std::size_t e = 0; e < trace.epochs.size(); ++e)
    if (trace.epochs[e].min_feature_std < threshold)
      report.flagged_epochs.push_back(int(e) + 1);
  return report;
}

void write_trace_csv(const TrainTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out.precision(17);
  out << "epoch,d_loss,g_loss,val_mmd,min_feature_std\n";
  for (std::size_t e = 0; e < trace.epochs.size(); ++e) {
    const auto& s = trace.epochs[e];
    out << (e + 1) << ',' << s.d_loss << ',' << s.g_loss << ',' << s.val_mmd << ','
        << s.min_feature_std << '\n';
  }
}

}  // namespace qcgan::gan
