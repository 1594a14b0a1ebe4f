#pragma once

#include <array>
#include <vector>

#include "qcgan/common.hpp"

// Minimal N-qubit simulator: statevector and density-matrix backends,
// {RX, RY, RZ, CNOT} gates, single-qubit noise channels and Pauli-Z readout.
//
// Convention used everywhere: qubit 0 is the least-significant bit of the
// computational-basis index, so |q3 q2 q1 q0> maps to index q3*8+q2*4+q1*2+q0.

namespace qcgan::qsim {

enum class Backend { Pure, Mixed };

enum class GateKind { RX, RY, RZ, CNOT };

struct GateOp {
  GateKind kind = GateKind::RY;
  int target = 0;
  int control = -1;    // CNOT only
  double angle = 0.0;  // rotations only

  static GateOp rx(int target, double angle) { return {GateKind::RX, target, -1, angle}; }
  static GateOp ry(int target, double angle) { return {GateKind::RY, target, -1, angle}; }
  static GateOp rz(int target, double angle) { return {GateKind::RZ, target, -1, angle}; }
  static GateOp cnot(int control, int target) { return {GateKind::CNOT, target, control, 0.0}; }
};

struct QuantumState {
  Backend backend = Backend::Pure;
  int num_qubits = 0;
  // Pure: 2^N amplitudes. Mixed: 2^N x 2^N density matrix, row-major, so
  // rho(r, c) = amps[r * 2^N + c].
  std::vector<cplx> amps;

  std::size_t dim() const { return std::size_t{1} << num_qubits; }
  cplx rho(std::size_t r, std::size_t c) const { return amps[r * dim() + c]; }
};

// |0...0> as a statevector or density matrix. num_qubits must be in [1, 10].
QuantumState init_ground(int num_qubits, Backend backend);

// Applies the gate in place. Mixed backend applies U rho U^dagger.
void apply_gate(QuantumState& state, const GateOp& gate);

// 2x2 unitary of a rotation gate, row-major.
std::array<cplx, 4> rotation_matrix(GateKind kind, double angle);

enum class ChannelKind { Depolarizing, BitFlip, AmplitudeDamping };

struct Channel {
  ChannelKind kind = ChannelKind::Depolarizing;
  double strength = 0.0;  // p for depolarizing/bit-flip, gamma for damping

  static Channel depolarizing(double p) { return {ChannelKind::Depolarizing, p}; }
  static Channel bitflip(double p) { return {ChannelKind::BitFlip, p}; }
  static Channel amplitude_damping(double gamma) {
    return {ChannelKind::AmplitudeDamping, gamma};
  }
};

// Kraus operators (2x2, row-major) of a single-qubit channel:
//   depolarizing: {sqrt(1-p) I, sqrt(p/3) X, sqrt(p/3) Y, sqrt(p/3) Z}
//   bit-flip:     {sqrt(1-p) I, sqrt(p) X}
//   damping:      {[[1,0],[0,sqrt(1-g)]], [[0,sqrt(g)],[0,0]]}
std::vector<std::array<cplx, 4>> kraus_ops(ChannelKind kind, double strength);

// Applies the channel to one qubit of a mixed state (strength 0 is a no-op on
// either backend). Uses closed-form updates equivalent to sum_k K rho K^dag.
void apply_channel(QuantumState& state, const Channel& channel, int qubit);

// Brute-force Kraus-sum application; the oracle route the fast path is
// checked against in tests.
void apply_channel_kraus(QuantumState& state, const Channel& channel, int qubit);

// Layer noise: depolarizing -> bit-flip -> amplitude damping on every qubit,
// inserted after each variational layer by the generator.
struct NoiseSpec {
  double p_depolarizing = 0.0;
  double p_bitflip = 0.0;
  double gamma_amplitude_damping = 0.0;

  bool any() const {
    return p_depolarizing > 0.0 || p_bitflip > 0.0 || gamma_amplitude_damping > 0.0;
  }
  void validate() const;

  // Invented defaults, small enough to train through; all configurable.
  static NoiseSpec hardware_proxy() { return {0.01, 0.005, 0.01}; }
};

void apply_layer_noise(QuantumState& state, const NoiseSpec& noise);

// <Z_qubit> in [-1, 1].
double expect_z(const QuantumState& state, int qubit);

// |sum |a|^2 - 1| (pure) or |tr(rho) - 1| (mixed); invariant-check helper.
double norm_residual(const QuantumState& state);

}  // namespace qcgan::qsim
