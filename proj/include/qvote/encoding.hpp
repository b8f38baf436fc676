#pragma once

// Approval ballots as amplitude-encoded states, and the way back from
// measurement counts to approval sets and a tally.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qvote/error.hpp"
#include "qvote/qsim.hpp"

namespace qvote {

/// Approval bits indexed by candidate; candidate i corresponds to basis
/// index i of the register.
using Approvals = std::vector<bool>;

inline std::string approvals_to_string(const Approvals& a) {
  std::string out;
  out.reserve(a.size());
  for (bool b : a) out += b ? '1' : '0';
  return out;
}

inline Approvals approvals_from_string(std::string_view text) {
  Approvals a;
  for (char c : text) {
    if (c != '0' && c != '1') throw Error(ErrorCode::ParseError, "approval string '" + std::string(text) + "'");
    a.push_back(c == '1');
  }
  return a;
}

/// Smallest n with 2^n >= n_candidates.
constexpr std::size_t qubits_for(std::size_t n_candidates) {
  std::size_t n = 0;
  while ((std::size_t{1} << n) < n_candidates) ++n;
  return n;
}

class Ballot {
 public:
  explicit Ballot(Approvals approvals) : approvals_(std::move(approvals)) {
    if (approvals_.size() < 2) throw Error(ErrorCode::InvalidArgument, "a ballot needs at least 2 candidates");
    if (std::ranges::none_of(approvals_, [](bool b) { return b; })) {
      throw Error(ErrorCode::EmptyBallot, "ballot approves no candidate");
    }
  }

  /// '1101' approves candidates 1, 2 and 4 of four.
  static Ballot parse(std::string_view text) { return Ballot(approvals_from_string(text)); }

  std::size_t n_candidates() const noexcept { return approvals_.size(); }
  const Approvals& approvals() const noexcept { return approvals_; }
  bool approves(std::size_t candidate) const { return approvals_.at(candidate); }
  std::size_t approval_count() const {
    return static_cast<std::size_t>(std::ranges::count(approvals_, true));
  }
  std::string to_string() const { return approvals_to_string(approvals_); }

  friend bool operator==(const Ballot&, const Ballot&) = default;

 private:
  Approvals approvals_;
};

struct ElectionConfig {
  std::size_t n_candidates = 4;
  std::size_t n_qubits = 2;
  std::uint64_t shots_per_ballot = 1024;
  double decode_threshold = 0.05;

  /// n_qubits = max(ceil(log2 N), min_qubits). The protocol asks for at
  /// least two qubits so that a Bell pair always exists.
  static ElectionConfig for_candidates(std::size_t n_candidates, std::size_t min_qubits = 1) {
    ElectionConfig c;
    c.n_candidates = n_candidates;
    c.n_qubits = std::max(qubits_for(n_candidates), min_qubits);
    c.validate();
    return c;
  }

  void validate() const {
    if (n_candidates < 2) throw Error(ErrorCode::InvalidArgument, "n_candidates must be >= 2");
    if (n_qubits < qubits_for(n_candidates) || n_qubits > kMaxQubits) {
      throw Error(ErrorCode::ConfigMismatch, std::to_string(n_qubits) + " qubits cannot index " +
                                                 std::to_string(n_candidates) + " candidates");
    }
    if (shots_per_ballot == 0) throw Error(ErrorCode::InvalidArgument, "shots_per_ballot must be >= 1");
    if (!(decode_threshold > 0.0 && decode_threshold < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "decode_threshold must lie in (0, 1)");
    }
  }
};

/// amplitude[i] = 1/sqrt(k) on each of the k approved candidates, 0 on
/// disapproved candidates and on unused basis states i >= N.
inline StateVector encode_ballot(const Ballot& ballot, const ElectionConfig& config) {
  if (ballot.n_candidates() != config.n_candidates) {
    throw Error(ErrorCode::ConfigMismatch, "ballot has " + std::to_string(ballot.n_candidates()) +
                                               " candidates, election has " + std::to_string(config.n_candidates));
  }
  const double amplitude = 1.0 / std::sqrt(static_cast<double>(ballot.approval_count()));
  std::vector<Complex> amps(std::size_t{1} << config.n_qubits, 0.0);
  for (std::size_t i = 0; i < ballot.n_candidates(); ++i) {
    if (ballot.approves(i)) amps[i] = amplitude;
  }
  return StateVector::from_amplitudes(std::move(amps));
}

struct Decoded {
  Approvals approvals;
  double noise_fraction = 0.0;  // shots on disapproved or unused basis states
};

namespace detail {

inline Decoded decode_frequencies(std::span<const double> freq, const ElectionConfig& config) {
  Decoded out{Approvals(config.n_candidates, false), 0.0};
  for (std::size_t i = 0; i < freq.size(); ++i) {
    if (i < config.n_candidates && freq[i] >= config.decode_threshold) {
      out.approvals[i] = true;
    } else {
      out.noise_fraction += freq[i];
    }
  }
  return out;
}

}  // namespace detail

/// Candidate i is approved iff count(i) / shots >= decode_threshold.
inline Decoded decode_counts(const Counts& counts, const ElectionConfig& config) {
  if (counts.shots == 0) throw Error(ErrorCode::InvalidArgument, "counts carry no shots");
  if (counts.n_qubits != config.n_qubits) {
    throw Error(ErrorCode::ConfigMismatch, "counts are over " + std::to_string(counts.n_qubits) + " qubits");
  }
  std::vector<double> freq(std::size_t{1} << config.n_qubits, 0.0);
  for (const auto& [label, n] : counts.table) {
    freq.at(parse_bitstring(label)) += static_cast<double>(n) / static_cast<double>(counts.shots);
  }
  return detail::decode_frequencies(freq, config);
}

/// Debug readout straight from |amplitude|^2, no sampling.
inline Decoded decode_exact(const StateVector& state, const ElectionConfig& config) {
  if (state.n_qubits() != config.n_qubits) throw Error(ErrorCode::ConfigMismatch, "state width differs from config");
  std::vector<double> freq(state.dimension());
  for (std::size_t i = 0; i < freq.size(); ++i) freq[i] = state.probability(i);
  return detail::decode_frequencies(freq, config);
}

struct TallyResult {
  std::vector<std::uint64_t> per_candidate_approvals;
  std::vector<std::size_t> winners;  // 0-based candidate indices, ascending
  double noise_fraction = 0.0;       // mean over the tallied ballots

  friend bool operator==(const TallyResult&, const TallyResult&) = default;
};

inline TallyResult tally(std::span<const Approvals> ballots) {
  if (ballots.empty()) throw Error(ErrorCode::NoBallots, "nothing to tally");
  const std::size_t n = ballots.front().size();
  TallyResult result{std::vector<std::uint64_t>(n, 0), {}, 0.0};
  for (const auto& b : ballots) {
    if (b.size() != n) throw Error(ErrorCode::ConfigMismatch, "ballots of different lengths");
    for (std::size_t i = 0; i < n; ++i) result.per_candidate_approvals[i] += b[i] ? 1 : 0;
  }
  const auto best = std::ranges::max(result.per_candidate_approvals);
  for (std::size_t i = 0; i < n; ++i) {
    if (result.per_candidate_approvals[i] == best) result.winners.push_back(i);
  }
  return result;
}

inline TallyResult tally(std::span<const Decoded> ballots) {
  std::vector<Approvals> approvals;
  double noise = 0.0;
  for (const auto& d : ballots) {
    approvals.push_back(d.approvals);
    noise += d.noise_fraction;
  }
  TallyResult result = tally(std::span<const Approvals>(approvals));
  result.noise_fraction = noise / static_cast<double>(ballots.size());
  return result;
}

}  // namespace qvote
