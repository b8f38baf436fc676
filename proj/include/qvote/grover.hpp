#pragma once

// Grover lookup of a hash ID in the registration database.
//
// The oracle is the diagonal phase flip on every index whose slot equals the
// target digest; it is built by comparing digests classically rather than
// from a reversible hash circuit. Results are always rechecked classically.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "qvote/crypto.hpp"
#include "qvote/error.hpp"
#include "qvote/qsim.hpp"

namespace qvote {

/// A database slot. nullopt is the padding sentinel, which cannot compare
/// equal to any digest.
using DatabaseSlot = std::optional<Digest>;

inline constexpr std::size_t kMaxSearchSpace = 1024;
inline constexpr std::size_t kMinPaddedSearchSpace = 4;

struct SearchProblem {
  std::vector<DatabaseSlot> database;  // size M, a power of two in [2, 1024]
  Digest target{};

  std::size_t size() const noexcept { return database.size(); }
  std::size_t index_qubits() const { return static_cast<std::size_t>(std::countr_zero(database.size())); }
};

/// Pads `entries` with sentinels up to a power of two no smaller than
/// `min_size`. The default of 4 avoids M = 2, where one iteration leaves the
/// target at probability 1/2.
inline SearchProblem make_search_problem(std::span<const DatabaseSlot> entries, const Digest& target,
                                         std::size_t min_size = kMinPaddedSearchSpace) {
  std::size_t m = std::max<std::size_t>(min_size, 2);
  while (m < entries.size()) m <<= 1;
  if (m > kMaxSearchSpace) {
    throw Error(ErrorCode::InvalidArgument, "search space of " + std::to_string(m) + " exceeds 1024");
  }
  SearchProblem p{std::vector<DatabaseSlot>(entries.begin(), entries.end()), target};
  p.database.resize(m, std::nullopt);
  return p;
}

/// k = floor((pi / 4) * sqrt(M)): 1 for M = 2 and M = 4, 3 for M = 16.
/// Rounding instead would pick k = 2 at M = 4 and drop the success
/// probability from 1 to 1/4.
inline std::size_t grover_iterations(std::size_t m) {
  return static_cast<std::size_t>(std::floor(std::numbers::pi / 4.0 * std::sqrt(static_cast<double>(m))));
}

/// sin^2((2k + 1) * asin(1 / sqrt(M))), single marked item.
inline double grover_analytic_success(std::size_t m, std::size_t k) {
  const double theta = std::asin(1.0 / std::sqrt(static_cast<double>(m)));
  const double s = std::sin((2.0 * static_cast<double>(k) + 1.0) * theta);
  return s * s;
}

struct GroverResult {
  bool found = false;
  std::optional<std::size_t> index;  // modal outcome, set only when found
  double success_prob = 0.0;         // |amplitude|^2 on the target before sampling
  Counts counts;
};

namespace detail {

inline void hadamard_all(StateVector& s, NoiseChannel* noise) {
  for (std::size_t q = 0; q < s.n_qubits(); ++q) apply_gate(s, GateOp::h(q), noise);
}

inline void noise_on_all(StateVector& s, NoiseChannel* noise) {
  if (!noise) return;
  std::vector<std::size_t> all(s.n_qubits());
  for (std::size_t q = 0; q < all.size(); ++q) all[q] = q;
  noise->after_gate(s, all);
}

}  // namespace detail

/// Runs k oracle + diffusion rounds from the uniform superposition, samples
/// `shots` outcomes and checks the modal index against the database. Gate
/// noise, if any, follows every H and each oracle and reflection layer.
inline GroverResult grover_search(const SearchProblem& problem, std::uint64_t shots, NoiseChannel& channel,
                                  std::optional<std::size_t> iterations = std::nullopt) {
  const std::size_t m = problem.size();
  if (m < 2 || m > kMaxSearchSpace || (m & (m - 1)) != 0) {
    throw Error(ErrorCode::InvalidArgument, "database size must be a power of two in [2, 1024]");
  }
  std::vector<std::size_t> marked;
  for (std::size_t i = 0; i < m; ++i) {
    if (problem.database[i] && *problem.database[i] == problem.target) marked.push_back(i);
  }
  if (marked.size() > 1) throw Error(ErrorCode::AmbiguousTarget, "target appears " + std::to_string(marked.size()) + " times");

  NoiseChannel* noise = &channel;
  StateVector s(problem.index_qubits());
  detail::hadamard_all(s, noise);
  const std::size_t k = iterations.value_or(grover_iterations(m));
  for (std::size_t round = 0; round < k; ++round) {
    auto amps = s.mutable_amplitudes();
    for (std::size_t i : marked) amps[i] = -amps[i];
    detail::noise_on_all(s, noise);

    detail::hadamard_all(s, noise);
    amps = s.mutable_amplitudes();
    for (std::size_t i = 1; i < amps.size(); ++i) amps[i] = -amps[i];  // 2|0><0| - I
    detail::noise_on_all(s, noise);
    detail::hadamard_all(s, noise);
  }

  GroverResult result;
  result.success_prob = marked.empty() ? 0.0 : s.probability(marked.front());
  result.counts = measure_shots(s, shots, channel);

  std::uint64_t best = 0;
  std::size_t modal = 0;
  for (const auto& [label, n] : result.counts.table) {
    if (n > best) {
      best = n;
      modal = static_cast<std::size_t>(parse_bitstring(label));
    }
  }
  if (problem.database[modal] && *problem.database[modal] == problem.target) {
    result.found = true;
    result.index = modal;
  }
  return result;
}

inline GroverResult grover_search(const SearchProblem& problem, std::uint64_t shots, std::uint64_t seed) {
  NoiseChannel noiseless({0.0, 0.0, seed});
  return grover_search(problem, shots, noiseless);
}

/// Replaces every slot holding `id` with the sentinel. Size is preserved.
inline void remove_id(std::vector<DatabaseSlot>& database, const Digest& id) {
  for (auto& slot : database) {
    if (slot && *slot == id) slot.reset();
  }
}

}  // namespace qvote
