#include "qcgan/qgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace qcgan::qgen {

namespace {

constexpr double kPi = std::numbers::pi;

void check_param_count(const CircuitConfig& config, std::size_t got) {
  if (got != config.param_count())
    throw UsageError("generator parameters: expected " +
                     std::to_string(config.param_count()) + " angles, got " +
                     std::to_string(got));
}

void check_latent(const CircuitConfig& config, std::size_t got) {
  if (got != static_cast<std::size_t>(config.num_qubits))
    throw UsageError("latent vector: expected " + std::to_string(config.num_qubits) +
                     " components, got " + std::to_string(got));
}

void append_layer(GeneratorCircuit& circuit, const CircuitConfig& config,
                  std::span<const double> layer_params) {
  const int n = config.num_qubits;
  std::size_t p = 0;
  for (int q = 0; q < n; ++q) {
    switch (config.rotations) {
      case RotationSet::RxRz:
        circuit.gates.push_back(qsim::GateOp::rx(q, layer_params[p++]));
        circuit.gates.push_back(qsim::GateOp::rz(q, layer_params[p++]));
        break;
      case RotationSet::RyRz:
        circuit.gates.push_back(qsim::GateOp::ry(q, layer_params[p++]));
        circuit.gates.push_back(qsim::GateOp::rz(q, layer_params[p++]));
        break;
      case RotationSet::RyOnly:
        circuit.gates.push_back(qsim::GateOp::ry(q, layer_params[p++]));
        break;
    }
  }
  // Ring entangler CNOT(i, i+1 mod N); degenerate for a single qubit.
  if (n > 1) {
    for (int q = 0; q < n; ++q)
      circuit.gates.push_back(qsim::GateOp::cnot(q, (q + 1) % n));
  }
  circuit.noise_points.push_back(circuit.gates.size());
}

}  // namespace

void CircuitConfig::validate() const {
  if (num_qubits < 1 || num_qubits > 10)
    throw ConfigError("num_qubits must be in [1, 10]");
  if (num_blocks < 0 || layers_per_block < 0)
    throw ConfigError("num_blocks and layers_per_block must be non-negative");
}

GeneratorCircuit build_circuit(const CircuitConfig& config, std::span<const double> theta,
                               std::span<const double> z) {
  config.validate();
  check_param_count(config, theta.size());
  check_latent(config, z.size());
  GeneratorCircuit circuit;
  const std::size_t per_layer = config.params_per_layer();
  std::size_t offset = 0;
  for (int k = 0; k < config.num_blocks; ++k) {
    // SUDAI: the same latent vector is re-injected ahead of every block.
    for (int q = 0; q < config.num_qubits; ++q)
      circuit.gates.push_back(qsim::GateOp::ry(q, kPi * z[q]));
    for (int l = 0; l < config.layers_per_block; ++l) {
      append_layer(circuit, config, theta.subspan(offset, per_layer));
      offset += per_layer;
    }
  }
  return circuit;
}

void encode(qsim::QuantumState& state, std::span<const double> z) {
  if (z.size() != static_cast<std::size_t>(state.num_qubits))
    throw UsageError("encode: latent length " + std::to_string(z.size()) +
                     " does not match " + std::to_string(state.num_qubits) + " qubits");
  for (int q = 0; q < state.num_qubits; ++q)
    apply_gate(state, qsim::GateOp::ry(q, kPi * z[q]));
}

void apply_variational_layer(qsim::QuantumState& state, const CircuitConfig& config,
                             std::span<const double> layer_params) {
  if (layer_params.size() != config.params_per_layer())
    throw UsageError("variational layer: expected " +
                     std::to_string(config.params_per_layer()) + " angles, got " +
                     std::to_string(layer_params.size()));
  GeneratorCircuit layer;
  append_layer(layer, config, layer_params);
  for (const auto& gate : layer.gates) apply_gate(state, gate);
}

Vec generate(const CircuitConfig& config, std::span<const double> theta,
             std::span<const double> z, const qsim::NoiseSpec& noise) {
  noise.validate();
  const GeneratorCircuit circuit = build_circuit(config, theta, z);
  auto state = qsim::init_ground(
      config.num_qubits, noise.any() ? qsim::Backend::Mixed : qsim::Backend::Pure);
  std::size_t next_noise = 0;
  for (std::size_t g = 0; g < circuit.gates.size(); ++g) {
    apply_gate(state, circuit.gates[g]);
    if (next_noise < circuit.noise_points.size() &&
        g + 1 == circuit.noise_points[next_noise]) {
      apply_layer_noise(state, noise);
      ++next_noise;
    }
  }
  Vec x(config.num_qubits);
  for (int q = 0; q < config.num_qubits; ++q) x[q] = expect_z(state, q);
  return x;
}

Vec parameter_shift_grad(const CircuitConfig& config, std::span<const double> theta,
                         std::span<const double> z, const qsim::NoiseSpec& noise,
                         std::span<const double> downstream) {
  check_param_count(config, theta.size());
  if (downstream.size() != static_cast<std::size_t>(config.num_qubits))
    throw UsageError("parameter_shift_grad: downstream gradient must have one entry "
                     "per qubit");
  Vec grad(theta.size(), 0.0);
  Vec shifted(theta.begin(), theta.end());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    shifted[j] = theta[j] + kPi / 2.0;
    const Vec plus = generate(config, shifted, z, noise);
    shifted[j] = theta[j] - kPi / 2.0;
    const Vec minus = generate(config, shifted, z, noise);
    shifted[j] = theta[j];
    double g = 0.0;
    for (int q = 0; q < config.num_qubits; ++q)
      g += downstream[q] * (plus[q] - minus[q]) / 2.0;
    grad[j] = g;
  }
  return grad;
}

Vec parameter_shift_grad_batch(const CircuitConfig& config, std::span<const double> theta,
                               const Mat& z_batch, const qsim::NoiseSpec& noise,
                               const Mat& downstream_batch) {
  if (z_batch.rows != downstream_batch.rows ||
      z_batch.cols != static_cast<std::size_t>(config.num_qubits) ||
      downstream_batch.cols != static_cast<std::size_t>(config.num_qubits))
    throw UsageError("parameter_shift_grad_batch: batch shapes disagree");
  const std::size_t batch = z_batch.rows;
  const std::size_t n_params = config.param_count();
  check_param_count(config, theta.size());

  // One task per (sample, parameter) cell; reduced over samples afterwards in
  // index order so the result does not depend on the thread count.
  Mat cells(batch, n_params);
  parallel_for(batch * n_params, [&](std::size_t idx) {
    const std::size_t s = idx / n_params;
    const std::size_t j = idx % n_params;
    Vec shifted(theta.begin(), theta.end());
    shifted[j] = theta[j] + kPi / 2.0;
    const Vec plus = generate(config, shifted, z_batch.row(s), noise);
    shifted[j] = theta[j] - kPi / 2.0;
    const Vec minus = generate(config, shifted, z_batch.row(s), noise);
    double g = 0.0;
    const auto down = downstream_batch.row(s);
    for (int q = 0; q < config.num_qubits; ++q)
      g += down[q] * (plus[q] - minus[q]) / 2.0;
    cells(s, j) = g;
  });

  Vec grad(n_params, 0.0);
  Vec column(batch);
  for (std::size_t j = 0; j < n_params; ++j) {
    for (std::size_t s = 0; s < batch; ++s) column[s] = cells(s, j);
    grad[j] = pairwise_sum(column);
  }
  return grad;
}

Vec sample_latent(int num_qubits, double clamp_sigma, Rng& rng) {
  if (clamp_sigma <= 0.0) throw ConfigError("latent clamp sigma must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec z(num_qubits);
  for (auto& v : z) {
    const double raw = normal(rng) / clamp_sigma;
    v = std::clamp(raw, -1.0, 1.0);
  }
  return z;
}

Vec init_params(const CircuitConfig& config, Rng& rng) {
  std::uniform_real_distribution<double> uni(-0.1, 0.1);
  Vec theta(config.param_count());
  for (auto& t : theta) t = uni(rng);
  return theta;
}

}  // namespace qcgan::qgen
