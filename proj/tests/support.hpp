#pragma once

// Test-only generators and the protocol security property checks, shared by
// the unit suites and the acceptance binary.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "qvote/qvote.hpp"

namespace qvote::testing {

inline StateVector random_state(std::size_t n_qubits, Rng& rng) {
  std::vector<Complex> amps(std::size_t{1} << n_qubits);
  double norm = 0.0;
  for (auto& a : amps) {
    a = Complex(rng.uniform() - 0.5, rng.uniform() - 0.5);
    norm += std::norm(a);
  }
  for (auto& a : amps) a /= std::sqrt(norm);
  return StateVector::from_amplitudes(std::move(amps));
}

inline GateOp random_gate(std::size_t n_qubits, Rng& rng) {
  static constexpr std::array kinds{GateKind::X, GateKind::Y, GateKind::Z,    GateKind::H,
                                    GateKind::S, GateKind::T, GateKind::CNOT, GateKind::CZ};
  const GateKind kind = kinds[rng.below(n_qubits >= 2 ? kinds.size() : 6)];
  const std::size_t a = rng.below(n_qubits);
  if (arity(kind) == 1) return GateOp::single(kind, a, rng.below(2) == 1);
  std::size_t b = rng.below(n_qubits - 1);
  if (b >= a) ++b;
  return {kind, {a, b}, false};
}

inline SignatureSpec random_signature(std::size_t n_qubits, std::size_t max_len, Rng& rng) {
  SignatureSpec spec;
  const std::size_t len = rng.below(max_len + 1);
  for (std::size_t i = 0; i < len; ++i) spec.gates.push_back(random_gate(n_qubits, rng));
  return spec;
}

inline Ballot random_ballot(std::size_t n_candidates, Rng& rng) {
  while (true) {
    Approvals a(n_candidates);
    for (std::size_t i = 0; i < n_candidates; ++i) a[i] = rng.below(2) == 1;
    if (std::ranges::any_of(a, [](bool b) { return b; })) return Ballot(a);
  }
}

/// The four 3-of-4 ballots. Their states have no nontrivial Pauli
/// stabilizer, so every single-qubit Pauli tamper and every wrong Bell
/// guess changes what is measured.
inline std::vector<Ballot> asymmetric_ballots() {
  return {Ballot::parse("1101"), Ballot::parse("1110"), Ballot::parse("1011"), Ballot::parse("0111")};
}

inline const SignatureSpec& sample_signature() {
  static const SignatureSpec spec = SignatureSpec::parse("Z@0;X@1");
  return spec;
}

/// Honest pass through every protocol step for one voter.
struct HonestVote {
  CastReceipt receipt;
  Block block;
  bool verified = false;
  KeyRelease release;
};

inline HonestVote vote_honestly(ElectionRun& run, Voter& voter, const Ballot& ballot, const SignatureSpec& sig,
                                const EntangleSpec& ent, Tamper tamper = {}) {
  HonestVote v;
  v.receipt = run.cast_vote(voter, ballot, sig, ent, std::move(tamper));
  v.block = run.scrutinize_and_record(voter);
  v.verified = run.voter_verify(voter);
  if (v.verified) v.release = run.release_keys(voter);
  return v;
}

struct PropertyResult {
  bool pass = true;
  std::string detail;
  std::size_t cases = 0;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

inline ElectionConfig four_candidates() { return ElectionConfig::for_candidates(4, 2); }

// -- Anonymity ---------------------------------------------------------------

inline std::string bits_as_bytes(const BitVector& bits) {
  std::string out((bits.size() + 7) / 8, '\0');
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out[i / 8] = static_cast<char>(out[i / 8] | (1 << (7 - i % 8)));
  }
  return out;
}

inline PropertyResult check_anonymity() {
  PropertyResult r;
  const std::vector<std::string> ids{"alice-01", "bob-the-voter", "carol#77", "dave@example.org", "eve-9"};
  ElectionInput in;
  in.seed = 991;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    VoterInput v;
    v.unique_id = ids[i];
    v.eligible = i != 4;
    v.ballot = asymmetric_ballots()[i % 4];
    v.signature = sample_signature();
    v.bell_variant = kBellVariants[i % 4];
    in.voters.push_back(v);
  }
  const std::string transcript = run_election(in).transcript.dump();

  ElectionRun run(four_candidates(), 0.0, 0.0, 991);
  std::vector<Voter> voters;
  for (const auto& id : ids) voters.emplace_back(id);
  std::vector<KeyRelease> releases;
  for (std::size_t i = 0; i < 4; ++i) run.register_voter(voters[i], true);
  for (std::size_t i = 0; i < 4; ++i) {
    releases.push_back(vote_honestly(run, voters[i], asymmetric_ballots()[i], sample_signature(), {kBellVariants[i], {0, 1}}).release);
  }
  run.release_and_tally(releases);

  std::vector<std::string> artifacts{transcript, run.ledger().to_json().dump()};
  for (const auto& b : run.ledger().blocks()) {
    const auto rec = serialize_record(b);
    artifacts.emplace_back(rec.begin(), rec.end());
  }
  for (const auto& m : run.classical_log()) {
    artifacts.push_back(m.text);
    artifacts.push_back(bits_as_bytes(m.payload));
  }
  for (const auto& a : artifacts) {
    for (const auto& id : ids) {
      ++r.cases;
      if (a.find(id) != std::string::npos) r.fail("unique_id '" + id + "' leaked into an artifact");
    }
  }
  return r;
}

// -- Binding -----------------------------------------------------------------

/// Every single-qubit Pauli applied in transit either drops the scrutineer's
/// expected-state fidelity below 1 - 1e-6 or changes the decoded ballot.
/// Swept over all Bell variants, both qubits, X/Y/Z and the 3-of-4 ballots.
inline PropertyResult check_binding() {
  PropertyResult r;
  std::uint64_t seed = 5000;
  for (const Ballot& ballot : asymmetric_ballots()) {
    for (BellVariant v : kBellVariants) {
      for (GateKind pauli : {GateKind::X, GateKind::Y, GateKind::Z}) {
        for (std::size_t q = 0; q < 2; ++q) {
          ElectionRun run(four_candidates(), 0.0, 0.0, seed++);
          Voter voter("binding-voter");
          run.register_voter(voter, true);
          const GateOp tamper = GateOp::single(pauli, q);
          const HonestVote hv = vote_honestly(run, voter, ballot, sample_signature(), {v, {0, 1}},
                                              [tamper](StateVector& s) { apply_gate(s, tamper); });
          const TallyReport report = run.release_and_tally(std::span(&hv.release, 1));
          const bool fidelity_dropped = hv.receipt.scrutineer_fidelity < 1.0 - 1e-6;
          const bool decoded_differs = report.audits.empty() || report.audits[0].decoded.approvals != ballot.approvals();
          ++r.cases;
          if (!fidelity_dropped && !decoded_differs) {
            r.fail("tamper " + format_gate(tamper) + " on ballot " + ballot.to_string() + " / " +
                   std::string(to_string(v)) + " went unnoticed");
          }
        }
      }
    }
  }
  return r;
}

// -- Non-reusability -----------------------------------------------------------

inline PropertyResult check_non_reusability() {
  PropertyResult r;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ElectionRun run(four_candidates(), 0.0, 0.0, 7000 + seed);
    Voter alice("alice-" + std::to_string(seed));
    Voter other("other-" + std::to_string(seed));
    run.register_voter(alice, true);
    run.register_voter(other, true);
    const Voter replayed = alice;  // same credentials, used a second time
    const HonestVote first = vote_honestly(run, alice, Ballot::parse("1101"), sample_signature(), {});
    if (run.registry_contains(*alice.hash_id())) r.fail("hash ID still in the database after recording");

    Voter again = replayed;
    run.cast_vote(again, Ballot::parse("0010"), sample_signature(), {});
    ++r.cases;
    try {
      run.scrutinize_and_record(again);
      r.fail("second cast was recorded");
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnknownVoter) r.fail(std::string("second cast raised ") + e.what());
    }
    Voter clone("alice-" + std::to_string(seed));
    ++r.cases;
    try {
      run.register_voter(clone, true);
      r.fail("re-registration accepted");
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AlreadyRegistered) r.fail(std::string("re-registration raised ") + e.what());
    }
    std::size_t blocks_for_alice = 0;
    for (const auto& b : run.ledger().blocks()) blocks_for_alice += b.voter_hash_id == *alice.hash_id();
    if (blocks_for_alice != 1) r.fail("ledger holds " + std::to_string(blocks_for_alice) + " blocks for one voter");
    (void)first;
  }
  return r;
}

// -- Verifiability -------------------------------------------------------------

inline PropertyResult check_verifiability() {
  PropertyResult r;
  Rng gen(424242);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_candidates = 3 + gen.below(6);
    const auto config = ElectionConfig::for_candidates(n_candidates, 2);
    const Ballot ballot = random_ballot(n_candidates, gen);
    const SignatureSpec sig = random_signature(config.n_qubits, 4, gen);
    const EntangleSpec ent{kBellVariants[gen.below(4)], {0, 1}};
    const std::uint64_t seed = gen.next_u64();

    for (int mutation = 0; mutation < 3; ++mutation) {
      ElectionRun run(config, 0.0, 0.0, seed);
      Voter voter("verifier-" + std::to_string(trial));
      run.register_voter(voter, true);
      run.cast_vote(voter, ballot, sig, ent);
      run.scrutinize_and_record(voter);
      if (mutation == 1) {
        run.tamper_ledger([](std::vector<Block>& blocks) { blocks[0].signing_details += ";Z@0"; });
      } else if (mutation == 2) {
        run.tamper_ledger([](std::vector<Block>& blocks) { blocks[0].voter_hash_id.digest[0] ^= 0x01; });
      }
      const bool ok = run.voter_verify(voter);
      ++r.cases;
      if (mutation == 0 && !ok) r.fail("honest voter failed verification in trial " + std::to_string(trial));
      if (mutation != 0 && ok) r.fail("mutated record passed verification in trial " + std::to_string(trial));
    }
  }
  return r;
}

// -- Eligibility ---------------------------------------------------------------

/// An intruder who is either ineligible or never registered runs the three
/// calls (register, cast, scrutinize) in every order next to an honest voter.
/// The ledger must never gain an intruder block.
inline PropertyResult check_eligibility() {
  PropertyResult r;
  std::array<int, 3> order{0, 1, 2};
  std::uint64_t seed = 9000;
  do {
    for (bool ever_registers : {true, false}) {
      ElectionRun run(four_candidates(), 0.0, 0.0, seed++);
      Voter honest("honest");
      run.register_voter(honest, true);
      vote_honestly(run, honest, Ballot::parse("1101"), sample_signature(), {});
      const std::size_t before = run.ledger().size();

      Voter intruder("intruder");
      for (int step : order) {
        try {
          if (step == 0 && ever_registers) run.register_voter(intruder, false);
          if (step == 1) run.cast_vote(intruder, Ballot::parse("0010"), sample_signature(), {});
          if (step == 2) run.scrutinize_and_record(intruder);
        } catch (const Error&) {
        }
      }
      ++r.cases;
      if (run.ledger().size() != before) r.fail("intruder produced a ledger block");
      if (intruder.hash_id()) r.fail("intruder obtained a hash ID");
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return r;
}

// -- Fairness ------------------------------------------------------------------

/// Reading a held state with a uniformly guessed Bell variant recovers the
/// ballot in at most 1/4 + 3 sigma of trials; without the authentic spec the
/// tally reports the ballot as blocked.
inline PropertyResult check_fairness(std::size_t trials = 400) {
  PropertyResult r;
  Rng gen(31337);
  std::size_t recovered = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto ballots = asymmetric_ballots();
    const Ballot& ballot = ballots[gen.below(ballots.size())];
    const EntangleSpec truth{kBellVariants[gen.below(4)], {0, 1}};
    ElectionRun run(four_candidates(), 0.0, 0.0, gen.next_u64());
    Voter voter("fair-" + std::to_string(t));
    run.register_voter(voter, true);
    run.cast_vote(voter, ballot, sample_signature(), truth);
    run.scrutinize_and_record(voter);
    run.voter_verify(voter);

    StateVector peeked = *run.held_state(*voter.hash_id());
    const EntangleSpec guess{kBellVariants[gen.below(4)], {0, 1}};
    apply_entangle(peeked, guess, Direction::Inverse);
    const Decoded d = decode_counts(measure_shots(peeked, 1024, gen.next_u64()), run.config());
    recovered += d.approvals == ballot.approvals();

    if (t % 50 == 0) {
      const TallyReport report = run.release_and_tally({});
      ++r.cases;
      if (report.result || report.blocked.size() != 1) r.fail("tally proceeded without the entanglement details");
    }
  }
  const double n = static_cast<double>(trials);
  const double rate = static_cast<double>(recovered) / n;
  const double bound = 0.25 + 3.0 * std::sqrt(0.25 * 0.75 / n);
  r.cases += trials;
  if (rate > bound) r.fail("premature read recovered " + std::to_string(rate) + " > " + std::to_string(bound));
  if (r.pass) r.detail = "recovery rate " + std::to_string(rate) + " <= " + std::to_string(bound);
  return r;
}

// -- Phase order -----------------------------------------------------------------

/// Every permutation of the five voter-facing calls. Only the protocol order
/// completes; every other order raises ProtocolOrderViolation.
inline PropertyResult check_phase_order() {
  PropertyResult r;
  std::array<int, 5> order{0, 1, 2, 3, 4};
  std::uint64_t seed = 12000;
  do {
    ElectionRun run(four_candidates(), 0.0, 0.0, seed++);
    Voter voter("phase-voter");
    bool violated = false;
    bool other_error = false;
    for (int step : order) {
      try {
        switch (step) {
          case 0: run.register_voter(voter, true); break;
          case 1: run.cast_vote(voter, Ballot::parse("1101"), sample_signature(), {}); break;
          case 2: run.scrutinize_and_record(voter); break;
          case 3: run.voter_verify(voter); break;
          case 4: run.release_keys(voter); break;
        }
      } catch (const Error& e) {
        (e.code() == ErrorCode::ProtocolOrderViolation ? violated : other_error) = true;
        break;
      }
    }
    const bool in_order = std::ranges::is_sorted(order);
    ++r.cases;
    if (other_error) r.fail("unexpected error kind during phase sweep");
    if (in_order && violated) r.fail("protocol order was rejected");
    if (!in_order && !violated) r.fail("out-of-order sequence completed");
  } while (std::next_permutation(order.begin(), order.end()));
  return r;
}

}  // namespace qvote::testing
