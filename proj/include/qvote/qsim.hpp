#pragma once

// Dense state-vector simulation: gates, Bell-basis entanglers, Monte-Carlo
// gate and readout noise, and shot sampling.
//
// Qubit ordering: qubit 0 is the leftmost character of a ket label, so in an
// n-qubit register qubit q is bit (n - 1 - q) of the basis index. "10" means
// qubit 0 = 1, qubit 1 = 0, basis index 2.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qvote/error.hpp"
#include "qvote/rng.hpp"

namespace qvote {

using Complex = std::complex<double>;

inline constexpr std::size_t kMaxQubits = 20;
inline constexpr double kNormTolerance = 1e-10;

/// Basis index rendered as a ket label of `n_qubits` characters.
inline std::string bitstring(std::uint64_t index, std::size_t n_qubits) {
  std::string out(n_qubits, '0');
  for (std::size_t q = 0; q < n_qubits; ++q) {
    if ((index >> (n_qubits - 1 - q)) & 1U) out[q] = '1';
  }
  return out;
}

inline std::uint64_t parse_bitstring(std::string_view bits) {
  if (bits.empty() || bits.size() > 64) {
    throw Error(ErrorCode::ParseError, "bitstring length must be in [1, 64]");
  }
  std::uint64_t index = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') throw Error(ErrorCode::ParseError, "bitstring '" + std::string(bits) + "'");
    index = (index << 1) | static_cast<std::uint64_t>(c == '1');
  }
  return index;
}

class StateVector {
 public:
  /// |0...0> on `n_qubits` qubits.
  explicit StateVector(std::size_t n_qubits) : n_qubits_(checked_qubits(n_qubits)), amps_(std::size_t{1} << n_qubits) {
    amps_[0] = 1.0;
  }

  /// Takes ownership of explicit amplitudes; the length must be a power of
  /// two and the vector must be normalized.
  static StateVector from_amplitudes(std::vector<Complex> amplitudes) {
    const std::size_t dim = amplitudes.size();
    if (dim < 2 || (dim & (dim - 1)) != 0) {
      throw Error(ErrorCode::DimensionMismatch, "amplitude count must be a power of two >= 2");
    }
    StateVector s(static_cast<std::size_t>(std::countr_zero(dim)));
    s.amps_ = std::move(amplitudes);
    if (std::abs(s.norm_squared() - 1.0) > kNormTolerance) {
      throw Error(ErrorCode::InvalidArgument, "amplitudes are not normalized");
    }
    return s;
  }

  std::size_t n_qubits() const noexcept { return n_qubits_; }
  std::size_t dimension() const noexcept { return amps_.size(); }
  std::span<const Complex> amplitudes() const noexcept { return amps_; }
  std::span<Complex> mutable_amplitudes() noexcept { return amps_; }
  const Complex& operator[](std::size_t index) const { return amps_.at(index); }

  double probability(std::size_t index) const { return std::norm(amps_.at(index)); }

  double norm_squared() const {
    double total = 0.0;
    for (const auto& a : amps_) total += std::norm(a);
    return total;
  }

  /// Bit mask of qubit q inside a basis index.
  std::size_t mask(std::size_t qubit) const { return std::size_t{1} << (n_qubits_ - 1 - qubit); }

 private:
  static std::size_t checked_qubits(std::size_t n) {
    if (n == 0 || n > kMaxQubits) {
      throw Error(ErrorCode::InvalidQubitCount,
                  "n_qubits = " + std::to_string(n) + " outside [1, " + std::to_string(kMaxQubits) + "]");
    }
    return n;
  }

  std::size_t n_qubits_;
  std::vector<Complex> amps_;
};

inline StateVector init_basis(std::size_t n_qubits, std::uint64_t basis_index) {
  StateVector s(n_qubits);
  if (basis_index >= s.dimension()) {
    throw Error(ErrorCode::InvalidBasisIndex,
                std::to_string(basis_index) + " >= 2^" + std::to_string(n_qubits));
  }
  auto amps = s.mutable_amplitudes();
  amps[0] = 0.0;
  amps[basis_index] = 1.0;
  return s;
}

/// |<a|b>|^2.
inline double fidelity(const StateVector& a, const StateVector& b) {
  if (a.n_qubits() != b.n_qubits()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.n_qubits()) + " vs " + std::to_string(b.n_qubits()) + " qubits");
  }
  Complex overlap = 0.0;
  const auto x = a.amplitudes();
  const auto y = b.amplitudes();
  for (std::size_t i = 0; i < x.size(); ++i) overlap += std::conj(x[i]) * y[i];
  return std::clamp(std::norm(overlap), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Gates

enum class GateKind { X, Y, Z, H, S, T, CNOT, CZ };

constexpr std::size_t arity(GateKind kind) {
  return (kind == GateKind::CNOT || kind == GateKind::CZ) ? 2 : 1;
}

constexpr std::string_view to_string(GateKind kind) {
  switch (kind) {
    case GateKind::X: return "X";
    case GateKind::Y: return "Y";
    case GateKind::Z: return "Z";
    case GateKind::H: return "H";
    case GateKind::S: return "S";
    case GateKind::T: return "T";
    case GateKind::CNOT: return "CNOT";
    case GateKind::CZ: return "CZ";
  }
  return "?";
}

/// One gate application. For CNOT, qubits[0] is the control and qubits[1]
/// the target. `adjoint` is only meaningful for S and T; the other kinds are
/// self-inverse and always carry adjoint == false.
struct GateOp {
  GateKind kind = GateKind::X;
  std::array<std::size_t, 2> qubits{0, 0};
  bool adjoint = false;

  std::span<const std::size_t> targets() const { return {qubits.data(), arity(kind)}; }

  static GateOp single(GateKind kind, std::size_t q, bool adjoint = false) {
    return {kind, {q, 0}, adjoint && (kind == GateKind::S || kind == GateKind::T)};
  }
  static GateOp x(std::size_t q) { return single(GateKind::X, q); }
  static GateOp y(std::size_t q) { return single(GateKind::Y, q); }
  static GateOp z(std::size_t q) { return single(GateKind::Z, q); }
  static GateOp h(std::size_t q) { return single(GateKind::H, q); }
  static GateOp s(std::size_t q, bool adjoint = false) { return single(GateKind::S, q, adjoint); }
  static GateOp t(std::size_t q, bool adjoint = false) { return single(GateKind::T, q, adjoint); }
  static GateOp cnot(std::size_t control, std::size_t target) { return {GateKind::CNOT, {control, target}, false}; }
  static GateOp cz(std::size_t a, std::size_t b) { return {GateKind::CZ, {a, b}, false}; }

  friend bool operator==(const GateOp& a, const GateOp& b) {
    if (a.kind != b.kind || a.adjoint != b.adjoint) return false;
    return std::ranges::equal(a.targets(), b.targets());
  }
};

inline GateOp inverse(const GateOp& g) {
  GateOp inv = g;
  if (g.kind == GateKind::S || g.kind == GateKind::T) inv.adjoint = !g.adjoint;
  return inv;
}

/// "X@0", "CNOT@0,1", "S'@0".
inline std::string format_gate(const GateOp& g) {
  std::string out(to_string(g.kind));
  if (g.adjoint) out += '\'';
  out += '@';
  out += std::to_string(g.qubits[0]);
  if (arity(g.kind) == 2) {
    out += ',';
    out += std::to_string(g.qubits[1]);
  }
  return out;
}

inline GateOp parse_gate(std::string_view text) {
  const auto fail = [&](const char* why) -> GateOp {
    throw Error(ErrorCode::ParseError, "gate descriptor '" + std::string(text) + "': " + why);
  };
  const auto at = text.find('@');
  if (at == std::string_view::npos) return fail("missing '@'");
  std::string_view name = text.substr(0, at);
  bool adjoint = false;
  if (!name.empty() && name.back() == '\'') {
    adjoint = true;
    name.remove_suffix(1);
  }
  static constexpr std::array kinds{GateKind::X, GateKind::Y, GateKind::Z,    GateKind::H,
                                    GateKind::S, GateKind::T, GateKind::CNOT, GateKind::CZ};
  std::optional<GateKind> kind;
  for (GateKind k : kinds) {
    if (to_string(k) == name) kind = k;
  }
  if (!kind) return fail("unknown gate");
  if (adjoint && *kind != GateKind::S && *kind != GateKind::T) return fail("only S and T take an adjoint mark");

  std::vector<std::size_t> qubits;
  std::string_view rest = text.substr(at + 1);
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view token = rest.substr(0, comma);
    if (token.empty() || token.size() > 3 || !std::ranges::all_of(token, [](char c) { return c >= '0' && c <= '9'; })) {
      return fail("bad qubit index");
    }
    qubits.push_back(static_cast<std::size_t>(std::stoul(std::string(token))));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (qubits.size() != arity(*kind)) return fail("wrong number of qubits");
  GateOp g{*kind, {qubits[0], qubits.size() > 1 ? qubits[1] : 0}, adjoint};
  return g;
}

inline void check_targets(const StateVector& s, std::span<const std::size_t> targets) {
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] >= s.n_qubits()) {
      throw Error(ErrorCode::InvalidTarget,
                  "qubit " + std::to_string(targets[i]) + " on a " + std::to_string(s.n_qubits()) + "-qubit register");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (targets[i] == targets[j]) throw Error(ErrorCode::InvalidTarget, "repeated qubit " + std::to_string(targets[i]));
    }
  }
}

namespace detail {

using Mat2 = std::array<Complex, 4>;  // row-major

inline void apply_single(StateVector& s, std::size_t q, const Mat2& m) {
  auto amps = s.mutable_amplitudes();
  const std::size_t bit = s.mask(q);
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if (i & bit) continue;
    const Complex a0 = amps[i];
    const Complex a1 = amps[i | bit];
    amps[i] = m[0] * a0 + m[1] * a1;
    amps[i | bit] = m[2] * a0 + m[3] * a1;
  }
}

inline void apply_phase(StateVector& s, std::size_t q, Complex phase) {
  auto amps = s.mutable_amplitudes();
  const std::size_t bit = s.mask(q);
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if (i & bit) amps[i] *= phase;
  }
}

inline void apply_unchecked(StateVector& s, const GateOp& g) {
  constexpr double r = std::numbers::sqrt2 / 2.0;
  const Complex i1{0.0, 1.0};
  auto amps = s.mutable_amplitudes();
  switch (g.kind) {
    case GateKind::X: {
      const std::size_t bit = s.mask(g.qubits[0]);
      for (std::size_t i = 0; i < amps.size(); ++i) {
        if (!(i & bit)) std::swap(amps[i], amps[i | bit]);
      }
      break;
    }
    case GateKind::Y: apply_single(s, g.qubits[0], {0.0, -i1, i1, 0.0}); break;
    case GateKind::Z: apply_phase(s, g.qubits[0], -1.0); break;
    case GateKind::H: apply_single(s, g.qubits[0], {r, r, r, -r}); break;
    case GateKind::S: apply_phase(s, g.qubits[0], g.adjoint ? -i1 : i1); break;
    case GateKind::T: apply_phase(s, g.qubits[0], std::polar(1.0, (g.adjoint ? -1.0 : 1.0) * std::numbers::pi / 4.0)); break;
    case GateKind::CNOT: {
      const std::size_t c = s.mask(g.qubits[0]);
      const std::size_t t = s.mask(g.qubits[1]);
      for (std::size_t i = 0; i < amps.size(); ++i) {
        if ((i & c) && !(i & t)) std::swap(amps[i], amps[i | t]);
      }
      break;
    }
    case GateKind::CZ: {
      const std::size_t both = s.mask(g.qubits[0]) | s.mask(g.qubits[1]);
      for (std::size_t i = 0; i < amps.size(); ++i) {
        if ((i & both) == both) amps[i] = -amps[i];
      }
      break;
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Noise

struct NoiseConfig {
  double gate_error_p = 0.0;
  double meas_error_p = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const {
    const auto ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!ok(gate_error_p) || !ok(meas_error_p)) {
      throw Error(ErrorCode::InvalidArgument, "noise probabilities must lie in [0, 1]");
    }
  }
};

/// Noise probabilities plus the run's generator. One instance per protocol
/// run or trajectory; every stochastic draw in that run comes from its
/// stream, in application order.
///
/// Gate noise: after each ideal gate, each target qubit independently
/// suffers, with probability gate_error_p, one Pauli drawn uniformly from
/// {X, Y, Z}. Readout noise: each measured bit flips independently with
/// probability meas_error_p. A zero probability consumes no draws.
class NoiseChannel {
 public:
  explicit NoiseChannel(const NoiseConfig& config) : config_(config), rng_(config.rng_seed) { config_.validate(); }

  const NoiseConfig& config() const noexcept { return config_; }
  Rng& rng() noexcept { return rng_; }

  void after_gate(StateVector& s, std::span<const std::size_t> qubits) {
    if (config_.gate_error_p <= 0.0) return;
    for (std::size_t q : qubits) {
      if (rng_.uniform() < config_.gate_error_p) {
        static constexpr std::array paulis{GateKind::X, GateKind::Y, GateKind::Z};
        detail::apply_unchecked(s, GateOp::single(paulis[rng_.below(3)], q));
      }
    }
  }

  std::uint64_t readout(std::uint64_t index, std::size_t n_qubits) {
    if (config_.meas_error_p <= 0.0) return index;
    for (std::size_t q = 0; q < n_qubits; ++q) {
      if (rng_.uniform() < config_.meas_error_p) index ^= std::uint64_t{1} << (n_qubits - 1 - q);
    }
    return index;
  }

 private:
  NoiseConfig config_;
  Rng rng_;
};

inline StateVector& apply_gate(StateVector& s, const GateOp& g, NoiseChannel* noise = nullptr) {
  check_targets(s, g.targets());
  detail::apply_unchecked(s, g);
  if (noise) noise->after_gate(s, g.targets());
  return s;
}

inline StateVector& apply_circuit(StateVector& s, std::span<const GateOp> gates, NoiseChannel* noise = nullptr) {
  for (const auto& g : gates) apply_gate(s, g, noise);
  return s;
}

// ---------------------------------------------------------------------------
// Bell-basis entanglement

enum class BellVariant { PhiPlus, PhiMinus, PsiPlus, PsiMinus };

inline constexpr std::array kBellVariants{BellVariant::PhiPlus, BellVariant::PhiMinus, BellVariant::PsiPlus,
                                          BellVariant::PsiMinus};

constexpr std::string_view to_string(BellVariant v) {
  switch (v) {
    case BellVariant::PhiPlus: return "PhiPlus";
    case BellVariant::PhiMinus: return "PhiMinus";
    case BellVariant::PsiPlus: return "PsiPlus";
    case BellVariant::PsiMinus: return "PsiMinus";
  }
  return "?";
}

inline BellVariant parse_bell_variant(std::string_view name) {
  for (BellVariant v : kBellVariants) {
    if (to_string(v) == name) return v;
  }
  throw Error(ErrorCode::ParseError, "unknown Bell variant '" + std::string(name) + "'");
}

struct EntangleSpec {
  BellVariant bell_variant = BellVariant::PhiPlus;
  std::array<std::size_t, 2> qubit_pair{0, 1};

  friend bool operator==(const EntangleSpec&, const EntangleSpec&) = default;
};

enum class Direction { Forward, Inverse };

/// Forward: Pauli-X pre-layer selecting the variant (X on the first qubit
/// for the minus sign, X on the second for the Psi parity), then H on the
/// first qubit and CNOT(first -> second). Acting on |00> of the pair this
/// yields the named Bell state. Inverse is the reversed adjoint sequence.
inline std::vector<GateOp> entangle_circuit(const EntangleSpec& spec, Direction direction) {
  const auto [a, b] = spec.qubit_pair;
  std::vector<GateOp> gates;
  if (spec.bell_variant == BellVariant::PhiMinus || spec.bell_variant == BellVariant::PsiMinus) gates.push_back(GateOp::x(a));
  if (spec.bell_variant == BellVariant::PsiPlus || spec.bell_variant == BellVariant::PsiMinus) gates.push_back(GateOp::x(b));
  gates.push_back(GateOp::h(a));
  gates.push_back(GateOp::cnot(a, b));
  if (direction == Direction::Inverse) {
    std::ranges::reverse(gates);
    std::ranges::transform(gates, gates.begin(), [](const GateOp& g) { return inverse(g); });
  }
  return gates;
}

inline StateVector& apply_entangle(StateVector& s, const EntangleSpec& spec, Direction direction,
                                   NoiseChannel* noise = nullptr) {
  check_targets(s, spec.qubit_pair);
  const auto gates = entangle_circuit(spec, direction);
  return apply_circuit(s, gates, noise);
}

// ---------------------------------------------------------------------------
// Measurement

struct Counts {
  std::size_t n_qubits = 0;
  std::uint64_t shots = 0;
  std::map<std::string, std::uint64_t> table;  // ket label -> count; zero entries omitted

  std::uint64_t count(const std::string& label) const {
    const auto it = table.find(label);
    return it == table.end() ? 0 : it->second;
  }
  std::uint64_t count(std::uint64_t index) const { return count(bitstring(index, n_qubits)); }

  friend bool operator==(const Counts&, const Counts&) = default;
};

/// Samples `shots` basis outcomes from |amplitude|^2, then applies readout
/// flips. The state is not consumed: repeated preparation is modeled by
/// re-sampling the same vector.
inline Counts measure_shots(const StateVector& s, std::uint64_t shots, NoiseChannel& channel) {
  if (shots == 0) throw Error(ErrorCode::InvalidArgument, "shots must be >= 1");
  std::vector<double> cdf(s.dimension());
  double total = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    const double p = s.probability(i);
    if (p > 0.0) last_nonzero = i;
    total += p;
    cdf[i] = total;
  }
  Counts counts{s.n_qubits(), shots, {}};
  std::vector<std::uint64_t> tally(s.dimension(), 0);
  for (std::uint64_t shot = 0; shot < shots; ++shot) {
    const double r = channel.rng().uniform() * total;
    auto index = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
    if (index > last_nonzero) index = last_nonzero;
    ++tally[channel.readout(index, s.n_qubits())];
  }
  for (std::size_t i = 0; i < tally.size(); ++i) {
    if (tally[i] != 0) counts.table.emplace(bitstring(i, s.n_qubits()), tally[i]);
  }
  return counts;
}

inline Counts measure_shots(const StateVector& s, std::uint64_t shots, std::uint64_t seed) {
  NoiseChannel noiseless({0.0, 0.0, seed});
  return measure_shots(s, shots, noiseless);
}

}  // namespace qvote
