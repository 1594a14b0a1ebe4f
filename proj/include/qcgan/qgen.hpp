#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qcgan/common.hpp"
#include "qcgan/qsim.hpp"

// Variational quantum generator: angle encoding, K injection blocks of
// variational layers with ring entanglement, Pauli-Z measurement vector, and
// parameter-shift differentiation.

namespace qcgan::qgen {

enum class RotationSet { RxRz, RyRz, RyOnly };

struct CircuitConfig {
  int num_qubits = 4;        // N
  int num_blocks = 3;        // K injection blocks
  int layers_per_block = 2;  // L variational layers per block
  RotationSet rotations = RotationSet::RxRz;
  // Entangler is always the CNOT ring.

  int rotations_per_qubit() const { return rotations == RotationSet::RyOnly ? 1 : 2; }
  std::size_t params_per_layer() const {
    return static_cast<std::size_t>(num_qubits) * rotations_per_qubit();
  }
  // K * L * N * r trainable angles.
  std::size_t param_count() const {
    return static_cast<std::size_t>(num_blocks) * layers_per_block * params_per_layer();
  }
  void validate() const;

  // Preset with exactly 16 trainable angles (K=2, L=1, RX/RZ on 4 qubits).
  static CircuitConfig compact16() { return {4, 2, 1, RotationSet::RxRz}; }
};

// Full gate sequence of the generator circuit, with the positions where layer
// noise is inserted. Keeping the program explicit lets tests count gates
// (e.g. K*N encoding rotations) against the structure they assert.
struct GeneratorCircuit {
  std::vector<qsim::GateOp> gates;
  // Index one past the last gate of each variational layer; layer noise is
  // applied at these points, K*L in total.
  std::vector<std::size_t> noise_points;
};

GeneratorCircuit build_circuit(const CircuitConfig& config, std::span<const double> theta,
                               std::span<const double> z);

// R_Y(pi * z_i) on qubit i; z components are expected in [-1, 1].
void encode(qsim::QuantumState& state, std::span<const double> z);

// Per-qubit rotations followed by the CNOT ring (skipped for N=1).
void apply_variational_layer(qsim::QuantumState& state, const CircuitConfig& config,
                             std::span<const double> layer_params);

// Runs the full circuit from the ground state and returns (<Z_1>,...,<Z_N>).
// Any nonzero noise forces the mixed backend.
Vec generate(const CircuitConfig& config, std::span<const double> theta,
             std::span<const double> z, const qsim::NoiseSpec& noise);

// Parameter-shift gradient: d(downstream . x)/d(theta_j) via +-pi/2 shifts.
Vec parameter_shift_grad(const CircuitConfig& config, std::span<const double> theta,
                         std::span<const double> z, const qsim::NoiseSpec& noise,
                         std::span<const double> downstream);

// Sum over batch rows of the per-sample parameter-shift gradients, evaluated
// in parallel with an index-ordered reduction (deterministic).
Vec parameter_shift_grad_batch(const CircuitConfig& config, std::span<const double> theta,
                               const Mat& z_batch, const qsim::NoiseSpec& noise,
                               const Mat& downstream_batch);

// z ~ N(0, I) normalized into [-1, 1] by clamp(z / clamp_sigma, -1, 1).
Vec sample_latent(int num_qubits, double clamp_sigma, Rng& rng);

// Uniform angles in [-0.1, 0.1]: near-identity start.
Vec init_params(const CircuitConfig& config, Rng& rng);

}  // namespace qcgan::qgen
