#pragma once

// Voter / tallyman / scrutineer message flow for one election.
//
// Voter (Alice) phases advance strictly in this order:
//   Unregistered -> Registered -> Encoded -> Sent -> Verified -> KeysReleased
// and each ElectionRun call checks the phase it needs:
//   register_voter         Unregistered
//   cast_vote              Registered            (passes Encoded, ends Sent)
//   scrutinize_and_record  a held, unprocessed quantum message
//   voter_verify           Sent                  (ends Verified on success)
//   release_keys           Verified
// Anything else raises ProtocolOrderViolation.
//
// The tallyman (Bob) registers voters, issues keys, keeps K_AB and finally
// tallies. The scrutineer (Charlie) receives the quantum message and the
// K_AC-encrypted hash ID, removes the signature, looks the hash ID up with
// Grover search, records the ledger block and holds the state until tally.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qvote/crypto.hpp"
#include "qvote/encoding.hpp"
#include "qvote/error.hpp"
#include "qvote/grover.hpp"
#include "qvote/ledger.hpp"
#include "qvote/qsim.hpp"
#include "qvote/rng.hpp"

namespace qvote {

enum class Role { Voter, Tallyman, Scrutineer };

constexpr std::string_view to_string(Role r) {
  switch (r) {
    case Role::Voter: return "voter";
    case Role::Tallyman: return "tallyman";
    case Role::Scrutineer: return "scrutineer";
  }
  return "?";
}

enum class VoterPhase { Unregistered, Registered, Encoded, Sent, Verified, KeysReleased };

constexpr std::string_view to_string(VoterPhase p) {
  switch (p) {
    case VoterPhase::Unregistered: return "Unregistered";
    case VoterPhase::Registered: return "Registered";
    case VoterPhase::Encoded: return "Encoded";
    case VoterPhase::Sent: return "Sent";
    case VoterPhase::Verified: return "Verified";
    case VoterPhase::KeysReleased: return "KeysReleased";
  }
  return "?";
}

struct Party {
  Role role = Role::Voter;
  std::vector<SecretKey> held_keys;
};

/// Move-only carrier of a quantum state with exactly one holder. Moving a
/// message, or taking its state, leaves the source empty: the sender cannot
/// read the qubits after delivery.
class QuantumMessage {
 public:
  QuantumMessage(StateVector state, Role from, Role to) : state_(std::move(state)), from_(from), to_(to) {}

  QuantumMessage(const QuantumMessage&) = delete;
  QuantumMessage& operator=(const QuantumMessage&) = delete;
  QuantumMessage(QuantumMessage&& other) noexcept
      : state_(std::exchange(other.state_, std::nullopt)), from_(other.from_), to_(other.to_) {}
  QuantumMessage& operator=(QuantumMessage&& other) noexcept {
    state_ = std::exchange(other.state_, std::nullopt);
    from_ = other.from_;
    to_ = other.to_;
    return *this;
  }

  bool valid() const noexcept { return state_.has_value(); }
  Role from() const noexcept { return from_; }
  Role to() const noexcept { return to_; }

  StateVector take() {
    if (!state_) throw Error(ErrorCode::ProtocolOrderViolation, "quantum message already consumed");
    return *std::exchange(state_, std::nullopt);
  }

  /// Simulation-only inspection, used by analyses that play an adversary
  /// holding the qubits. Returns nullptr when empty.
  const StateVector* peek() const noexcept { return state_ ? &*state_ : nullptr; }

 private:
  friend class QuantumChannel;
  std::optional<StateVector> state_;
  Role from_;
  Role to_;
};

/// In-transit hook applied by an adversary on the quantum channel.
using Tamper = std::function<void(StateVector&)>;

class QuantumChannel {
 public:
  explicit QuantumChannel(Tamper tamper = {}) : tamper_(std::move(tamper)) {}

  QuantumMessage deliver(QuantumMessage&& message) const {
    QuantumMessage delivered(std::move(message));
    if (!delivered.valid()) throw Error(ErrorCode::ProtocolOrderViolation, "sending an empty quantum message");
    if (tamper_) tamper_(*delivered.state_);
    return delivered;
  }

 private:
  Tamper tamper_;
};

struct ClassicalMessage {
  Role from = Role::Voter;
  Role to = Role::Scrutineer;
  std::string topic;
  BitVector payload;  // otp output when encrypted_with is set
  std::string text;   // cleartext structured content
  std::optional<KeyLabel> encrypted_with;
};

// EntangleSpec wire form: 2 variant bits, then two 5-bit qubit indices, MSB first.
inline constexpr std::size_t kEntangleSpecBits = 12;

inline BitVector entangle_spec_to_bits(const EntangleSpec& spec) {
  BitVector bits;
  const auto push = [&](std::size_t value, std::size_t width) {
    for (std::size_t i = width; i-- > 0;) bits.push_back((value >> i) & 1U);
  };
  push(static_cast<std::size_t>(spec.bell_variant), 2);
  push(spec.qubit_pair[0], 5);
  push(spec.qubit_pair[1], 5);
  return bits;
}

inline EntangleSpec entangle_spec_from_bits(const BitVector& bits) {
  if (bits.size() != kEntangleSpecBits) throw Error(ErrorCode::ParseError, "entangle spec is 12 bits");
  const auto read = [&](std::size_t offset, std::size_t width) {
    std::size_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v = (v << 1) | static_cast<std::size_t>(bits[offset + i]);
    return v;
  };
  return {kBellVariants[read(0, 2)], {read(2, 5), read(7, 5)}};
}

class ElectionRun;

/// Alice's local credentials and progress. Copyable: a copy taken after
/// registration models a voter replaying the same credentials.
class Voter {
 public:
  explicit Voter(std::string unique_id) : unique_id_(std::move(unique_id)) {}

  const std::string& unique_id() const noexcept { return unique_id_; }
  VoterPhase phase() const noexcept { return phase_; }
  const std::optional<HashId>& hash_id() const noexcept { return hash_id_; }
  std::optional<std::size_t> session() const noexcept { return session_; }
  const std::optional<SignatureSpec>& signature() const noexcept { return signature_; }
  const std::optional<EntangleSpec>& entangle() const noexcept { return entangle_; }

  Party party() const {
    Party p{Role::Voter, {}};
    if (k_ab_) p.held_keys.push_back(*k_ab_);
    if (k_ac_) p.held_keys.push_back(*k_ac_);
    return p;
  }

 private:
  friend class ElectionRun;
  std::string unique_id_;
  VoterPhase phase_ = VoterPhase::Unregistered;
  std::optional<HashId> hash_id_;
  std::optional<std::size_t> session_;
  std::optional<SecretKey> k_ab_;
  std::optional<SecretKey> k_ac_;
  std::optional<SignatureSpec> signature_;
  std::optional<EntangleSpec> entangle_;
};

struct CastReceipt {
  std::size_t session = 0;
  std::string signing_details;
  /// Fidelity of the scrutineer's unsigned state with the ideal entangled
  /// ballot (computed by the simulator as a check handle).
  double scrutineer_fidelity = 1.0;
  bool tamper_suspected = false;
};

struct KeyRelease {
  HashId voter_hash_id;
  ClassicalMessage encrypted_spec;
};

struct BallotAudit {
  HashId voter_hash_id;
  Counts counts;
  Decoded decoded;
};

struct TallyReport {
  std::optional<TallyResult> result;  // nullopt when no ballot could be tallied
  std::vector<BallotAudit> audits;    // ledger order
  std::vector<HashId> blocked;        // held states with no usable key release
  Digest audit_digest{};              // co-signature over audits and blocked
};

/// SHA-256 over a canonical text rendering of audits and blocked IDs.
inline Digest compute_audit_digest(std::span<const BallotAudit> audits, std::span<const HashId> blocked) {
  std::string text;
  for (const auto& a : audits) {
    text += "ballot " + a.voter_hash_id.hex() + " shots " + std::to_string(a.counts.shots);
    for (const auto& [label, n] : a.counts.table) text += " " + label + "=" + std::to_string(n);
    text += " decoded " + approvals_to_string(a.decoded.approvals) + "\n";
  }
  for (const auto& h : blocked) text += "blocked " + h.hex() + "\n";
  return sha256(text);
}

struct RunOptions {
  std::size_t key_length = kDefaultKeyLength;
  std::size_t scrutineer_replicas = 1;  // Charlie_i group size; all replicas share one ledger
  std::uint64_t lookup_shots = 256;
  std::function<std::uint64_t()> clock;  // defaults to a monotone counter
};

inline constexpr std::uint64_t kClockEpochMs = 1'700'000'000'000ULL;

class ElectionRun {
 public:
  /// All randomness (hashing secret, keys, gate noise, readout) is drawn
  /// from one generator seeded with `master_seed`, in call order.
  ElectionRun(ElectionConfig config, double gate_error_p, double meas_error_p, std::uint64_t master_seed,
              RunOptions options = {})
      : config_(std::move(config)),
        channel_({gate_error_p, meas_error_p, master_seed}),
        master_seed_(master_seed),
        options_(std::move(options)) {
    config_.validate();
    if (config_.n_qubits < 2) throw Error(ErrorCode::ConfigMismatch, "the protocol needs at least 2 qubits");
    if (options_.key_length < 256) throw Error(ErrorCode::InvalidLength, "keys must cover a 256-bit hash ID");
    if (options_.scrutineer_replicas == 0) throw Error(ErrorCode::InvalidArgument, "need at least one scrutineer");
    if (!options_.clock) {
      options_.clock = [tick = std::uint64_t{0}]() mutable { return kClockEpochMs + tick++; };
    }
    hashing_secret_.resize(32);
    for (auto& c : hashing_secret_) c = static_cast<char>(channel_.rng().below(256));
  }

  const ElectionConfig& config() const noexcept { return config_; }
  const NoiseConfig& noise() const noexcept { return channel_.config(); }
  std::uint64_t master_seed() const noexcept { return master_seed_; }
  const RunOptions& options() const noexcept { return options_; }
  const Ledger& ledger() const noexcept { return ledger_; }
  std::span<const DatabaseSlot> registry() const noexcept { return registry_; }
  std::span<const ClassicalMessage> classical_log() const noexcept { return classical_log_; }

  bool registry_contains(const HashId& h) const {
    return std::ranges::any_of(registry_, [&](const DatabaseSlot& s) { return s && *s == h.digest; });
  }

  Party tallyman() const {
    Party p{Role::Tallyman, {}};
    for (const auto& [digest, key] : bob_k_ab_) p.held_keys.push_back(key);
    return p;
  }

  Party scrutineer() const {
    Party p{Role::Scrutineer, {}};
    for (const auto& [session, key] : charlie_k_ac_) p.held_keys.push_back(key);
    return p;
  }

  // -- Initialize ------------------------------------------------------------

  /// Bob checks eligibility, hashes the unique ID with the secret he shares
  /// with the voter, stores the hash ID in the voting database and issues
  /// K_AB (kept by Bob too) and K_AC (shared with the scrutineer).
  HashId register_voter(Voter& voter, bool eligible) {
    if (voter.phase_ != VoterPhase::Unregistered) throw Error(ErrorCode::AlreadyRegistered, "voter already registered");
    if (!eligible) throw Error(ErrorCode::NotEligible, "credentials rejected");
    return admit(voter, hash_id(voter.unique_id_, hashing_secret_));
  }

  /// Registration with a hash ID supplied by the caller instead of derived
  /// from a unique ID. Used when replaying a transcript, which never stores
  /// raw IDs. Consumes the same random draws as register_voter.
  HashId register_voter_hashed(Voter& voter, const HashId& precomputed) {
    if (voter.phase_ != VoterPhase::Unregistered) throw Error(ErrorCode::AlreadyRegistered, "voter already registered");
    return admit(voter, precomputed);
  }

  // -- Voting ----------------------------------------------------------------

  CastReceipt cast_vote(Voter& voter, const Ballot& ballot, const SignatureSpec& signature, const EntangleSpec& entangle,
                        Tamper tamper = {}) {
    if (voter.phase_ != VoterPhase::Registered) {
      throw Error(ErrorCode::ProtocolOrderViolation,
                  "cast_vote needs phase Registered, voter is " + std::string(to_string(voter.phase_)));
    }
    StateVector state = encode_ballot(ballot, config_);
    check_targets(state, entangle.qubit_pair);
    for (const auto& g : signature.gates) check_targets(state, g.targets());
    voter.phase_ = VoterPhase::Encoded;

    StateVector reference = state;
    apply_entangle(reference, entangle, Direction::Forward);

    apply_entangle(state, entangle, Direction::Forward, &channel_);
    sign(state, signature, &channel_);
    QuantumMessage outbound(std::move(state), Role::Voter, Role::Scrutineer);
    QuantumMessage delivered = QuantumChannel(std::move(tamper)).deliver(std::move(outbound));

    Pending pending{std::move(delivered), {}, {}};
    pending.hash_message = log({Role::Voter, Role::Scrutineer, "hash_id",
                                otp(digest_to_bits(voter.hash_id_->digest), *voter.k_ac_), "", KeyLabel::AC});
    pending.signing_message = log({Role::Voter, Role::Scrutineer, "signing_details", {}, signature.descriptor(), std::nullopt});

    // Scrutineer removes the signature using the disclosed procedure.
    StateVector held = pending.message.take();
    unsign(held, SignatureSpec::parse(pending.signing_message.text), &channel_);

    CastReceipt receipt;
    receipt.session = *voter.session_;
    receipt.signing_details = pending.signing_message.text;
    receipt.scrutineer_fidelity = fidelity(reference, held);
    receipt.tamper_suspected = receipt.scrutineer_fidelity < 1.0 - 1e-6;
    pending.message = QuantumMessage(std::move(held), Role::Scrutineer, Role::Scrutineer);
    pending_.insert_or_assign(*voter.session_, std::move(pending));

    voter.signature_ = signature;
    voter.entangle_ = entangle;
    voter.phase_ = VoterPhase::Sent;
    return receipt;
  }

  // -- Tally phase -----------------------------------------------------------

  /// Charlie decrypts the hash ID with K_AC, looks it up in Bob's database
  /// with Grover search, appends the ledger block and removes the ID. The
  /// voter object only identifies the channel session.
  Block scrutinize_and_record(const Voter& voter) {
    if (!voter.session_) throw Error(ErrorCode::ProtocolOrderViolation, "no session: voter never registered");
    auto it = pending_.find(*voter.session_);
    if (it == pending_.end()) throw Error(ErrorCode::ProtocolOrderViolation, "no quantum message held for this session");
    Pending pending = std::move(it->second);
    pending_.erase(it);

    const HashId claimed{digest_from_bits(otp(pending.hash_message.payload, charlie_k_ac_.at(*voter.session_))),
                         std::string(kHashAlgorithm)};
    NoiseChannel lookup({0.0, 0.0, derive_seed(master_seed_, 0x6c6f6f6b00000000ULL + lookups_++)});
    const GroverResult found = grover_search(make_search_problem(registry_, claimed.digest), options_.lookup_shots, lookup);
    if (!found.found) throw Error(ErrorCode::UnknownVoter, "hash ID not in the voting database; vote discarded");

    const Block& block = ledger_.append_block(claimed, pending.signing_message.text, options_.clock());
    remove_id(registry_, claimed.digest);
    held_.insert_or_assign(claimed.digest, std::move(pending.message));
    held_order_.push_back(claimed);
    return block;
  }

  /// Alice looks up her block and compares hash ID and signing details with
  /// her own records.
  bool voter_verify(Voter& voter) {
    if (voter.phase_ != VoterPhase::Sent) {
      throw Error(ErrorCode::ProtocolOrderViolation,
                  "voter_verify needs phase Sent, voter is " + std::string(to_string(voter.phase_)));
    }
    const auto block = ledger_.find_registration(*voter.hash_id_);
    const bool ok = block && block->voter_hash_id.digest == voter.hash_id_->digest &&
                    block->signing_details == voter.signature_->descriptor();
    if (ok) voter.phase_ = VoterPhase::Verified;
    return ok;
  }

  /// Alice, convinced her vote arrived intact, sends her entanglement
  /// details to Bob under K_AB.
  KeyRelease release_keys(Voter& voter) {
    if (voter.phase_ != VoterPhase::Verified) {
      throw Error(ErrorCode::ProtocolOrderViolation,
                  "release_keys needs phase Verified, voter is " + std::string(to_string(voter.phase_)));
    }
    KeyRelease release{*voter.hash_id_, log({Role::Voter, Role::Tallyman, "entangle_spec",
                                             otp(entangle_spec_to_bits(*voter.entangle_), *voter.k_ab_), "", KeyLabel::AB})};
    voter.phase_ = VoterPhase::KeysReleased;
    return release;
  }

  /// For each held state in ledger order: Bob decrypts the released
  /// EntangleSpec with K_AB, Charlie hands over the qubits, Bob undoes the
  /// entanglement, measures shots_per_ballot shots and decodes. States whose
  /// release is missing or unusable stay with Charlie, entangled, and are
  /// reported as blocked.
  TallyReport release_and_tally(std::span<const KeyRelease> releases) {
    TallyReport report;
    std::vector<Decoded> decoded;
    for (const HashId& h : held_order_) {
      auto held = held_.find(h.digest);
      if (held == held_.end() || !held->second.valid()) continue;
      const auto spec = authentic_spec(h, releases);
      if (!spec || !valid_pair(*spec)) {
        report.blocked.push_back(h);
        continue;
      }
      QuantumMessage to_bob(std::move(held->second));
      held_.erase(held);
      StateVector state = to_bob.take();
      apply_entangle(state, *spec, Direction::Inverse, &channel_);
      BallotAudit audit{h, measure_shots(state, config_.shots_per_ballot, channel_), {}};
      audit.decoded = decode_counts(audit.counts, config_);
      decoded.push_back(audit.decoded);
      report.audits.push_back(std::move(audit));
    }
    if (!decoded.empty()) report.result = tally(std::span<const Decoded>(decoded));
    report.audit_digest = compute_audit_digest(report.audits, report.blocked);
    return report;
  }

  /// Scrutineer-side check of a tally: each audited or blocked ballot has a
  /// ledger block, none appears twice, and the co-signature matches.
  bool audit_consistent(const TallyReport& report) const {
    std::set<Digest> seen;
    const auto check = [&](const HashId& h) { return ledger_.find_registration(h) && seen.insert(h.digest).second; };
    for (const auto& a : report.audits) {
      if (!check(a.voter_hash_id)) return false;
    }
    for (const auto& h : report.blocked) {
      if (!check(h)) return false;
    }
    return report.audit_digest == compute_audit_digest(report.audits, report.blocked);
  }

  /// The state Charlie holds for `h`, or nullptr. Simulation-only access for
  /// analyses of what a premature reader could learn.
  const StateVector* held_state(const HashId& h) const {
    const auto it = held_.find(h.digest);
    return it == held_.end() ? nullptr : it->second.peek();
  }

  /// Adversary hook: rewrites the public ledger in place, as a compromised
  /// record keeper could. Subsequent appends refuse an invalid chain.
  void tamper_ledger(const std::function<void(std::vector<Block>&)>& edit) {
    std::vector<Block> blocks(ledger_.blocks().begin(), ledger_.blocks().end());
    edit(blocks);
    ledger_ = Ledger::from_blocks(std::move(blocks));
  }

 private:
  struct Pending {
    QuantumMessage message;
    ClassicalMessage hash_message;
    ClassicalMessage signing_message;
  };

  HashId admit(Voter& voter, const HashId& h) {
    if (issued_.contains(h.digest)) throw Error(ErrorCode::AlreadyRegistered, "unique ID already registered");
    if (registry_.size() >= kMaxSearchSpace) throw Error(ErrorCode::InvalidArgument, "voting database is full");
    SecretKey k_ab = gen_key(KeyLabel::AB, options_.key_length, channel_.rng());
    SecretKey k_ac = gen_key(KeyLabel::AC, options_.key_length, channel_.rng());
    const std::size_t session = next_session_++;
    issued_.insert(h.digest);
    registry_.emplace_back(h.digest);
    bob_k_ab_.insert_or_assign(h.digest, k_ab);
    charlie_k_ac_.insert_or_assign(session, k_ac);
    voter.hash_id_ = h;
    voter.session_ = session;
    voter.k_ab_ = std::move(k_ab);
    voter.k_ac_ = std::move(k_ac);
    voter.phase_ = VoterPhase::Registered;
    return h;
  }

  std::optional<EntangleSpec> authentic_spec(const HashId& h, std::span<const KeyRelease> releases) const {
    const auto key = bob_k_ab_.find(h.digest);
    if (key == bob_k_ab_.end()) return std::nullopt;
    for (const auto& r : releases) {
      if (r.voter_hash_id.digest != h.digest) continue;
      try {
        return entangle_spec_from_bits(otp(r.encrypted_spec.payload, key->second));
      } catch (const Error&) {
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  bool valid_pair(const EntangleSpec& spec) const {
    const auto [a, b] = spec.qubit_pair;
    return a != b && a < config_.n_qubits && b < config_.n_qubits;
  }

  const ClassicalMessage& log(ClassicalMessage m) {
    classical_log_.push_back(std::move(m));
    return classical_log_.back();
  }

  ElectionConfig config_;
  NoiseChannel channel_;
  std::uint64_t master_seed_;
  RunOptions options_;
  std::string hashing_secret_;

  std::vector<DatabaseSlot> registry_;  // Bob's voting database
  std::set<Digest> issued_;
  std::map<Digest, SecretKey> bob_k_ab_;
  std::map<std::size_t, SecretKey> charlie_k_ac_;
  std::size_t next_session_ = 0;
  std::uint64_t lookups_ = 0;

  std::map<std::size_t, Pending> pending_;      // Charlie's inbox by session
  std::map<Digest, QuantumMessage> held_;       // cast states awaiting tally
  std::vector<HashId> held_order_;
  Ledger ledger_;
  std::vector<ClassicalMessage> classical_log_;
};

}  // namespace qvote
