#include "qcgan/qsim.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace qcgan::qsim {

namespace {

// Applies a 2x2 matrix to one bit position of a flat complex vector. Works on
// statevectors directly; density matrices reuse it via the row/column bit
// trick in apply_two_sided below.
void apply_single_qubit(std::vector<cplx>& v, int bit, const std::array<cplx, 4>& u) {
  const std::size_t mask = std::size_t{1} << bit;
  const std::size_t n = v.size();
  for (std::size_t high = 0; high < n; high += mask << 1) {
    for (std::size_t low = 0; low < mask; ++low) {
      const std::size_t i0 = high | low;
      const std::size_t i1 = i0 | mask;
      const cplx a0 = v[i0];
      const cplx a1 = v[i1];
      v[i0] = u[0] * a0 + u[1] * a1;
      v[i1] = u[2] * a0 + u[3] * a1;
    }
  }
}

void apply_cnot_bits(std::vector<cplx>& v, int control_bit, int target_bit) {
  const std::size_t cmask = std::size_t{1} << control_bit;
  const std::size_t tmask = std::size_t{1} << target_bit;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    if ((i & cmask) && !(i & tmask)) std::swap(v[i], v[i | tmask]);
  }
}

std::array<cplx, 4> conj_mat(const std::array<cplx, 4>& m) {
  return {std::conj(m[0]), std::conj(m[1]), std::conj(m[2]), std::conj(m[3])};
}

// rho -> M rho M^dagger on one qubit of a density matrix. Row index bits live
// at positions [N, 2N), column bits at [0, N).
void apply_two_sided(QuantumState& state, int qubit, const std::array<cplx, 4>& m) {
  apply_single_qubit(state.amps, qubit + state.num_qubits, m);
  apply_single_qubit(state.amps, qubit, conj_mat(m));
}

void check_qubit(const QuantumState& state, int qubit, const char* what) {
  if (qubit < 0 || qubit >= state.num_qubits)
    throw UsageError(std::string(what) + ": qubit index " + std::to_string(qubit) +
                     " out of range for " + std::to_string(state.num_qubits) + " qubits");
}

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ConfigError(std::string(what) + " must be in [0, 1], got " + std::to_string(p));
}

// Visits each 2x2 sub-block of the density matrix belonging to `qubit` and
// rewrites its entries (a b; c d) in place.
template <typename BlockFn>
void for_each_block(QuantumState& state, int qubit, BlockFn&& fn) {
  const std::size_t row_mask = std::size_t{1} << (qubit + state.num_qubits);
  const std::size_t col_mask = std::size_t{1} << qubit;
  const std::size_t n = state.amps.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i & (row_mask | col_mask)) continue;
    fn(state.amps[i], state.amps[i | col_mask], state.amps[i | row_mask],
       state.amps[i | row_mask | col_mask]);
  }
}

}  // namespace

QuantumState init_ground(int num_qubits, Backend backend) {
  if (num_qubits < 1 || num_qubits > 10)
    throw ConfigError("num_qubits must be in [1, 10], got " + std::to_string(num_qubits));
  QuantumState state;
  state.backend = backend;
  state.num_qubits = num_qubits;
  const std::size_t dim = state.dim();
  state.amps.assign(backend == Backend::Pure ? dim : dim * dim, cplx{0.0, 0.0});
  state.amps[0] = cplx{1.0, 0.0};
  return state;
}

std::array<cplx, 4> rotation_matrix(GateKind kind, double angle) {
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  switch (kind) {
    case GateKind::RX:
      return {cplx{c, 0}, cplx{0, -s}, cplx{0, -s}, cplx{c, 0}};
    case GateKind::RY:
      return {cplx{c, 0}, cplx{-s, 0}, cplx{s, 0}, cplx{c, 0}};
    case GateKind::RZ:
      return {cplx{c, -s}, cplx{0, 0}, cplx{0, 0}, cplx{c, s}};
    case GateKind::CNOT:
      break;
  }
  throw UsageError("rotation_matrix: CNOT has no single-qubit matrix");
}

void apply_gate(QuantumState& state, const GateOp& gate) {
  check_qubit(state, gate.target, "apply_gate");
  if (gate.kind == GateKind::CNOT) {
    check_qubit(state, gate.control, "apply_gate");
    if (gate.control == gate.target)
      throw UsageError("apply_gate: CNOT control equals target");
    if (state.backend == Backend::Pure) {
      apply_cnot_bits(state.amps, gate.control, gate.target);
    } else {
      apply_cnot_bits(state.amps, gate.control + state.num_qubits,
                      gate.target + state.num_qubits);
      apply_cnot_bits(state.amps, gate.control, gate.target);
    }
    return;
  }
  const auto u = rotation_matrix(gate.kind, gate.angle);
  if (state.backend == Backend::Pure) {
    apply_single_qubit(state.amps, gate.target, u);
  } else {
    apply_two_sided(state, gate.target, u);
  }
}

std::vector<std::array<cplx, 4>> kraus_ops(ChannelKind kind, double strength) {
  check_probability(strength, "channel strength");
  const cplx z{0, 0};
  switch (kind) {
    case ChannelKind::Depolarizing: {
      const double k0 = std::sqrt(1.0 - strength);
      const double kp = std::sqrt(strength / 3.0);
      return {{cplx{k0, 0}, z, z, cplx{k0, 0}},    // sqrt(1-p) I
              {z, cplx{kp, 0}, cplx{kp, 0}, z},    // sqrt(p/3) X
              {z, cplx{0, -kp}, cplx{0, kp}, z},   // sqrt(p/3) Y
              {cplx{kp, 0}, z, z, cplx{-kp, 0}}};  // sqrt(p/3) Z
    }
    case ChannelKind::BitFlip: {
      const double k0 = std::sqrt(1.0 - strength);
      const double k1 = std::sqrt(strength);
      return {{cplx{k0, 0}, z, z, cplx{k0, 0}}, {z, cplx{k1, 0}, cplx{k1, 0}, z}};
    }
    case ChannelKind::AmplitudeDamping: {
      const double s = std::sqrt(1.0 - strength);
      const double g = std::sqrt(strength);
      return {{cplx{1, 0}, z, z, cplx{s, 0}}, {z, cplx{g, 0}, z, z}};
    }
  }
  throw UsageError("kraus_ops: unknown channel kind");
}

namespace {

void require_mixed_for_noise(const QuantumState& state, double strength) {
  if (state.backend == Backend::Pure && strength > 0.0)
    throw UsageError(
        "apply_channel: noise channels with nonzero strength require the mixed "
        "(density-matrix) backend; re-run with Backend::Mixed");
}

}  // namespace

void apply_channel(QuantumState& state, const Channel& channel, int qubit) {
  check_probability(channel.strength, "channel strength");
  check_qubit(state, qubit, "apply_channel");
  if (channel.strength == 0.0) return;
  require_mixed_for_noise(state, channel.strength);
  const double p = channel.strength;
  switch (channel.kind) {
    case ChannelKind::Depolarizing: {
      // (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z), per 2x2 block
      const double diag_keep = 1.0 - 2.0 * p / 3.0;
      const double diag_swap = 2.0 * p / 3.0;
      const double off = 1.0 - 4.0 * p / 3.0;
      for_each_block(state, qubit, [&](cplx& a, cplx& b, cplx& c, cplx& d) {
        const cplx a0 = a, d0 = d;
        a = diag_keep * a0 + diag_swap * d0;
        d = diag_swap * a0 + diag_keep * d0;
        b *= off;
        c *= off;
      });
      return;
    }
    case ChannelKind::BitFlip: {
      for_each_block(state, qubit, [&](cplx& a, cplx& b, cplx& c, cplx& d) {
        const cplx a0 = a, b0 = b, c0 = c, d0 = d;
        a = (1.0 - p) * a0 + p * d0;
        b = (1.0 - p) * b0 + p * c0;
        c = (1.0 - p) * c0 + p * b0;
        d = (1.0 - p) * d0 + p * a0;
      });
      return;
    }
    case ChannelKind::AmplitudeDamping: {
      const double s = std::sqrt(1.0 - p);
      for_each_block(state, qubit, [&](cplx& a, cplx& b, cplx& c, cplx& d) {
        a += p * d;
        b *= s;
        c *= s;
        d *= (1.0 - p);
      });
      return;
    }
  }
  throw UsageError("apply_channel: unknown channel kind");
}

void apply_channel_kraus(QuantumState& state, const Channel& channel, int qubit) {
  check_probability(channel.strength, "channel strength");
  check_qubit(state, qubit, "apply_channel");
  if (channel.strength == 0.0) return;
  require_mixed_for_noise(state, channel.strength);
  const auto ops = kraus_ops(channel.kind, channel.strength);
  std::vector<cplx> out(state.amps.size(), cplx{0, 0});
  QuantumState term = state;
  for (const auto& k : ops) {
    term.amps = state.amps;
    apply_two_sided(term, qubit, k);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += term.amps[i];
  }
  state.amps = std::move(out);
}

void NoiseSpec::validate() const {
  check_probability(p_depolarizing, "p_depolarizing");
  check_probability(p_bitflip, "p_bitflip");
  check_probability(gamma_amplitude_damping, "gamma_amplitude_damping");
}

void apply_layer_noise(QuantumState& state, const NoiseSpec& noise) {
  if (!noise.any()) return;
  for (int q = 0; q < state.num_qubits; ++q) {
    apply_channel(state, Channel::depolarizing(noise.p_depolarizing), q);
    apply_channel(state, Channel::bitflip(noise.p_bitflip), q);
    apply_channel(state, Channel::amplitude_damping(noise.gamma_amplitude_damping), q);
  }
}

double expect_z(const QuantumState& state, int qubit) {
  check_qubit(state, qubit, "expect_z");
  const std::size_t mask = std::size_t{1} << qubit;
  const std::size_t dim = state.dim();
  if (state.backend == Backend::Pure) {
    double z = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double p = std::norm(state.amps[i]);
      z += (i & mask) ? -p : p;
    }
    return z;
  }
  cplx z{0, 0};
  for (std::size_t r = 0; r < dim; ++r) {
    const cplx diag = state.amps[r * dim + r];
    z += (r & mask) ? -diag : diag;
  }
  if (std::abs(z.imag()) >= 1e-10)
    throw std::logic_error("expect_z: density matrix has non-real diagonal");
  return z.real();
}

double norm_residual(const QuantumState& state) {
  const std::size_t dim = state.dim();
  if (state.backend == Backend::Pure) {
    double total = 0.0;
    for (const cplx& a : state.amps) total += std::norm(a);
    return std::abs(total - 1.0);
  }
  cplx trace{0, 0};
  for (std::size_t r = 0; r < dim; ++r) trace += state.amps[r * dim + r];
  return std::abs(trace - cplx{1.0, 0.0});
}

}  // namespace qcgan::qsim
