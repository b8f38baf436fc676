#pragma once

// Whole-election runs, noise sweeps and transcript replay, as driven by the
// qvote command-line tool. Everything here is deterministic given its seed.
//
// Election config:
//   {"n_candidates": 4, "shots": 1024, "seed": 7,
//    "noise": {"gate_error_p": 0.0, "meas_error_p": 0.0},
//    "voters": [{"unique_id": "alice-01", "eligible": true, "ballot": "1101",
//                "signature": ["Z@0", "X@1"], "bell_variant": "PhiPlus"}]}
// Optional: "decode_threshold" (0.05), "key_length" (256).
//
// Sweep spec:
//   {"error_axis": "gate" | "measurement", "p_values": [...],
//    "fixed_other_p": 0.0, "shots": 1024, "trajectories": 200,
//    "ballot": "1101", "seed": 1}
// Optional: "signature" (["Z@0", "X@1"]), "bell_variant" ("PhiPlus").

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvote/crypto.hpp"
#include "qvote/encoding.hpp"
#include "qvote/error.hpp"
#include "qvote/ledger.hpp"
#include "qvote/protocol.hpp"
#include "qvote/qsim.hpp"

namespace qvote {

using nlohmann::json;

inline constexpr std::string_view kTranscriptFormat = "qvote-transcript/1";
inline constexpr std::string_view kSweepCsvHeader = "p,mean_noise_fraction,std,trajectories,shots";

struct VoterInput {
  std::optional<std::string> unique_id;
  std::optional<HashId> hash_id;  // replay: registration hash taken from a transcript
  bool eligible = true;
  Ballot ballot = Ballot::parse("1101");
  SignatureSpec signature;
  BellVariant bell_variant = BellVariant::PhiPlus;
};

struct ElectionInput {
  std::size_t n_candidates = 4;
  std::uint64_t shots = 1024;
  double decode_threshold = 0.05;
  std::size_t key_length = kDefaultKeyLength;
  double gate_error_p = 0.0;
  double meas_error_p = 0.0;
  std::uint64_t seed = 0;
  std::vector<VoterInput> voters;
};

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline SignatureSpec parse_signature(const json& j) {
  SignatureSpec spec;
  for (const auto& g : j) spec.gates.push_back(parse_gate(g.get<std::string>()));
  return spec;
}

inline json signature_json(const SignatureSpec& spec) {
  json out = json::array();
  for (const auto& g : spec.gates) out.push_back(format_gate(g));
  return out;
}

inline std::string candidate_label(std::size_t index) { return "c" + std::to_string(index + 1); }

}  // namespace detail

/// Throws Error(ParseError / InvalidArgument / EmptyBallot ...) on a
/// malformed or invalid config.
inline ElectionInput parse_election_config(const json& j) {
  ElectionInput in;
  try {
    in.n_candidates = j.at("n_candidates").get<std::size_t>();
    in.shots = detail::get_or<std::uint64_t>(j, "shots", 1024);
    in.decode_threshold = detail::get_or<double>(j, "decode_threshold", 0.05);
    in.key_length = detail::get_or<std::size_t>(j, "key_length", kDefaultKeyLength);
    in.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      in.gate_error_p = detail::get_or<double>(n, "gate_error_p", 0.0);
      in.meas_error_p = detail::get_or<double>(n, "meas_error_p", 0.0);
    }
    for (const auto& v : j.at("voters")) {
      VoterInput vi;
      if (v.contains("unique_id")) vi.unique_id = v.at("unique_id").get<std::string>();
      if (v.contains("hash_id") && !v.at("hash_id").is_null()) {
        vi.hash_id = HashId{digest_from_hex(v.at("hash_id").get<std::string>()), std::string(kHashAlgorithm)};
      }
      vi.eligible = detail::get_or<bool>(v, "eligible", true);
      vi.ballot = Ballot::parse(v.at("ballot").get<std::string>());
      if (v.contains("signature")) vi.signature = detail::parse_signature(v.at("signature"));
      vi.bell_variant = parse_bell_variant(detail::get_or<std::string>(v, "bell_variant", "PhiPlus"));
      in.voters.push_back(std::move(vi));
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::ParseError, std::string("election config: ") + ex.what());
  }
  if (in.n_candidates < 2) throw Error(ErrorCode::InvalidArgument, "n_candidates must be >= 2");
  for (const auto& v : in.voters) {
    if (v.ballot.n_candidates() != in.n_candidates) {
      throw Error(ErrorCode::ConfigMismatch, "ballot '" + v.ballot.to_string() + "' does not cover " +
                                                 std::to_string(in.n_candidates) + " candidates");
    }
  }
  NoiseConfig{in.gate_error_p, in.meas_error_p, in.seed}.validate();
  return in;
}

struct ElectionOutcome {
  json transcript;
  std::vector<std::string> violations;
  std::string summary;
};

/// Registers every voter, then runs cast, scrutiny, verification and key
/// release for each registered voter in config order, then tallies.
/// Ineligible voters also attempt a cast, which must be refused.
inline ElectionOutcome run_election(const ElectionInput& in) {
  ElectionConfig config = ElectionConfig::for_candidates(in.n_candidates, 2);
  config.shots_per_ballot = in.shots;
  config.decode_threshold = in.decode_threshold;
  RunOptions options;
  options.key_length = in.key_length;
  ElectionRun run(config, in.gate_error_p, in.meas_error_p, in.seed, options);

  ElectionOutcome out;
  json voters_out = json::array();
  std::vector<Voter> voters;
  std::vector<std::string> status(in.voters.size());
  for (std::size_t i = 0; i < in.voters.size(); ++i) {
    const auto& vi = in.voters[i];
    voters.emplace_back(vi.unique_id.value_or(""));
    try {
      if (!vi.eligible) {
        run.register_voter(voters.back(), false);
      } else if (vi.hash_id) {
        run.register_voter_hashed(voters.back(), *vi.hash_id);
      } else if (vi.unique_id) {
        run.register_voter(voters.back(), true);
      } else {
        throw Error(ErrorCode::AlreadyRegistered, "no identity recorded");
      }
      status[i] = "registered";
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NotEligible) {
        status[i] = "ineligible";
      } else if (e.code() == ErrorCode::AlreadyRegistered) {
        status[i] = "duplicate";
      } else {
        throw;
      }
    }
  }

  json registry = json::array();
  for (const auto& slot : run.registry()) registry.push_back(to_hex(*slot));

  std::vector<KeyRelease> releases;
  for (std::size_t i = 0; i < in.voters.size(); ++i) {
    const auto& vi = in.voters[i];
    Voter& voter = voters[i];
    json entry = {{"status", status[i]}, {"hash_id", nullptr}};
    if (voter.hash_id()) entry["hash_id"] = voter.hash_id()->hex();
    const EntangleSpec entangle{vi.bell_variant, {0, 1}};
    if (status[i] != "registered") {
      try {
        run.cast_vote(voter, vi.ballot, vi.signature, entangle);
        out.violations.push_back("voter " + std::to_string(i) + " cast without registration");
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ProtocolOrderViolation) throw;
      }
      voters_out.push_back(entry);
      continue;
    }
    const CastReceipt receipt = run.cast_vote(voter, vi.ballot, vi.signature, entangle);
    entry["scrutineer_fidelity"] = receipt.scrutineer_fidelity;
    entry["tamper_suspected"] = receipt.tamper_suspected;
    if (receipt.tamper_suspected && in.gate_error_p == 0.0) {
      out.violations.push_back("voter " + std::to_string(i) + " message altered in transit");
    }
    try {
      run.scrutinize_and_record(voter);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnknownVoter) throw;
      entry["status"] = "rejected";
      out.violations.push_back("voter " + std::to_string(i) + " rejected by scrutineer");
      voters_out.push_back(entry);
      continue;
    }
    const bool verified = run.voter_verify(voter);
    entry["verified"] = verified;
    if (verified) {
      releases.push_back(run.release_keys(voter));
    } else {
      out.violations.push_back("voter " + std::to_string(i) + " could not verify the ledger record");
    }
    voters_out.push_back(entry);
  }

  const TallyReport report = run.release_and_tally(releases);
  if (const auto check = verify_chain(run.ledger()); !check.valid) {
    out.violations.push_back("ledger invalid at block " + std::to_string(*check.first_bad_index));
  }
  if (!run.audit_consistent(report)) out.violations.push_back("tally audit inconsistent with ledger");
  for (const auto& h : report.blocked) out.violations.push_back("tally blocked for " + h.hex());

  json ballots = json::array();
  for (const auto& a : report.audits) {
    ballots.push_back({{"voter_hash_id", a.voter_hash_id.hex()},
                       {"shots", a.counts.shots},
                       {"counts", a.counts.table},
                       {"decoded", approvals_to_string(a.decoded.approvals)},
                       {"noise_fraction", a.decoded.noise_fraction}});
  }
  json blocked = json::array();
  for (const auto& h : report.blocked) blocked.push_back(h.hex());
  json tally_json = nullptr;
  if (report.result) {
    json winners = json::array();
    for (std::size_t w : report.result->winners) winners.push_back(detail::candidate_label(w));
    tally_json = {{"per_candidate_approvals", report.result->per_candidate_approvals},
                  {"winners", winners},
                  {"noise_fraction", report.result->noise_fraction}};
  }

  json config_voters = json::array();
  for (const auto& vi : in.voters) {
    config_voters.push_back({{"eligible", vi.eligible},
                             {"ballot", vi.ballot.to_string()},
                             {"signature", detail::signature_json(vi.signature)},
                             {"bell_variant", std::string(to_string(vi.bell_variant))}});
  }
  out.transcript = {
      {"format", std::string(kTranscriptFormat)},
      {"master_seed", in.seed},
      {"config",
       {{"n_candidates", in.n_candidates},
        {"n_qubits", config.n_qubits},
        {"shots", in.shots},
        {"decode_threshold", in.decode_threshold},
        {"key_length", in.key_length},
        {"noise", {{"gate_error_p", in.gate_error_p}, {"meas_error_p", in.meas_error_p}}},
        {"voters", config_voters}}},
      {"registry", registry},
      {"voters", voters_out},
      {"ledger", run.ledger().to_json()},
      {"ballots", ballots},
      {"blocked", blocked},
      {"tally", tally_json},
      {"audit_digest", to_hex(report.audit_digest)},
      {"violations", out.violations},
  };

  std::ostringstream summary;
  summary << "candidates: " << in.n_candidates << "  qubits: " << config.n_qubits << "  shots/ballot: " << in.shots
          << "\nvoters: " << in.voters.size() << "  ledger blocks: " << run.ledger().size()
          << "  tallied: " << report.audits.size() << "  blocked: " << report.blocked.size() << '\n';
  for (std::size_t b = 0; b < report.audits.size(); ++b) {
    summary << "ballot " << b << ":";
    for (std::uint64_t idx = 0; idx < (std::uint64_t{1} << config.n_qubits); ++idx) {
      summary << " |" << bitstring(idx, config.n_qubits) << ">=" << report.audits[b].counts.count(idx);
    }
    summary << "  decoded " << approvals_to_string(report.audits[b].decoded.approvals) << '\n';
  }
  if (report.result) {
    summary << "approvals:";
    for (std::size_t c = 0; c < report.result->per_candidate_approvals.size(); ++c) {
      summary << ' ' << detail::candidate_label(c) << '=' << report.result->per_candidate_approvals[c];
    }
    summary << "\nwinners:";
    for (std::size_t w : report.result->winners) summary << ' ' << detail::candidate_label(w);
    summary << '\n';
  }
  summary << (out.violations.empty() ? "security checks: ok\n" : "security checks: VIOLATION\n");
  for (const auto& v : out.violations) summary << "  " << v << '\n';
  out.summary = summary.str();
  return out;
}

// ---------------------------------------------------------------------------
// Replay

struct ReplayReport {
  bool identical = true;
  std::string divergence;  // first divergence, empty when identical
};

/// Rebuilds the election input from a transcript. Registration hash IDs are
/// taken from the transcript, which never records raw unique IDs.
inline ElectionInput election_input_from_transcript(const json& t) {
  try {
    if (t.at("format").get<std::string>() != kTranscriptFormat) throw Error(ErrorCode::ParseError, "unknown transcript format");
    const auto& c = t.at("config");
    json cfg = {{"n_candidates", c.at("n_candidates")},
                {"shots", c.at("shots")},
                {"decode_threshold", c.at("decode_threshold")},
                {"key_length", c.at("key_length")},
                {"seed", t.at("master_seed")},
                {"noise", c.at("noise")},
                {"voters", json::array()}};
    const auto& recorded = t.at("voters");
    const auto& cv = c.at("voters");
    if (recorded.size() != cv.size()) throw Error(ErrorCode::ParseError, "voter lists differ in length");
    for (std::size_t i = 0; i < cv.size(); ++i) {
      json v = cv[i];
      v["hash_id"] = recorded[i].at("hash_id");
      cfg["voters"].push_back(v);
    }
    return parse_election_config(cfg);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::ParseError, std::string("transcript: ") + ex.what());
  }
}

inline ReplayReport replay(const json& recorded) {
  const ElectionInput input = election_input_from_transcript(recorded);
  const auto diverge = [](std::string where) { return ReplayReport{false, std::move(where)}; };

  const Ledger recorded_ledger = Ledger::from_json(recorded.at("ledger"));
  if (const auto check = verify_chain(recorded_ledger); !check.valid) {
    return diverge("ledger verification failed at block " + std::to_string(*check.first_bad_index));
  }

  const json fresh = run_election(input).transcript;
  if (fresh.at("registry") != recorded.at("registry")) return diverge("registry");
  const auto& fl = fresh.at("ledger");
  const auto& rl = recorded.at("ledger");
  for (std::size_t i = 0; i < std::max(fl.size(), rl.size()); ++i) {
    if (i >= fl.size() || i >= rl.size() || fl[i] != rl[i]) return diverge("ledger block " + std::to_string(i));
  }
  const auto& fb = fresh.at("ballots");
  const auto& rb = recorded.at("ballots");
  for (std::size_t i = 0; i < std::max(fb.size(), rb.size()); ++i) {
    if (i >= fb.size() || i >= rb.size() || fb[i] != rb[i]) return diverge("ballot " + std::to_string(i) + " count table");
  }
  for (const char* key : {"voters", "blocked", "tally", "audit_digest", "violations"}) {
    if (fresh.at(key) != recorded.at(key)) return diverge(key);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Noise sweeps

enum class ErrorAxis { Gate, Measurement };

struct SweepSpec {
  ErrorAxis error_axis = ErrorAxis::Gate;
  std::vector<double> p_values;
  double fixed_other_p = 0.0;
  std::uint64_t shots = 1024;
  std::size_t trajectories = 100;
  Ballot ballot = Ballot::parse("1101");
  SignatureSpec signature = SignatureSpec::parse("Z@0;X@1");
  BellVariant bell_variant = BellVariant::PhiPlus;
  std::uint64_t seed = 0;

  void validate() const {
    if (p_values.empty()) throw Error(ErrorCode::InvalidArgument, "p_values is empty");
    for (std::size_t i = 0; i < p_values.size(); ++i) {
      if (!(p_values[i] >= 0.0 && p_values[i] <= 1.0)) throw Error(ErrorCode::InvalidArgument, "p outside [0, 1]");
      if (i > 0 && !(p_values[i] > p_values[i - 1])) throw Error(ErrorCode::InvalidArgument, "p_values must strictly increase");
    }
    if (!(fixed_other_p >= 0.0 && fixed_other_p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "fixed_other_p outside [0, 1]");
    if (shots == 0 || trajectories == 0) throw Error(ErrorCode::InvalidArgument, "shots and trajectories must be >= 1");
  }
};

inline SweepSpec parse_sweep_spec(const json& j) {
  SweepSpec s;
  try {
    const auto axis = j.at("error_axis").get<std::string>();
    if (axis == "gate") {
      s.error_axis = ErrorAxis::Gate;
    } else if (axis == "measurement") {
      s.error_axis = ErrorAxis::Measurement;
    } else {
      throw Error(ErrorCode::ParseError, "error_axis must be 'gate' or 'measurement'");
    }
    s.p_values = j.at("p_values").get<std::vector<double>>();
    s.fixed_other_p = detail::get_or<double>(j, "fixed_other_p", 0.0);
    s.shots = detail::get_or<std::uint64_t>(j, "shots", 1024);
    s.trajectories = detail::get_or<std::size_t>(j, "trajectories", 100);
    s.ballot = Ballot::parse(detail::get_or<std::string>(j, "ballot", "1101"));
    if (j.contains("signature")) s.signature = detail::parse_signature(j.at("signature"));
    s.bell_variant = parse_bell_variant(detail::get_or<std::string>(j, "bell_variant", "PhiPlus"));
    s.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::ParseError, std::string("sweep spec: ") + ex.what());
  }
  s.validate();
  return s;
}

struct SweepRow {
  double p = 0.0;
  double mean_noise_fraction = 0.0;
  double std = 0.0;  // sample standard deviation across trajectories
  std::size_t trajectories = 0;
  std::uint64_t shots = 0;
};

/// Fraction of shots on basis states outside the ballot's support. For
/// '1101' this is the |10> fraction.
inline double off_support_fraction(const Counts& counts, const Ballot& ballot) {
  std::uint64_t off = 0;
  for (const auto& [label, n] : counts.table) {
    const auto idx = parse_bitstring(label);
    if (idx >= ballot.n_candidates() || !ballot.approves(idx)) off += n;
  }
  return static_cast<double>(off) / static_cast<double>(counts.shots);
}

/// One full single-voter protocol run under the given noise.
inline double sweep_trajectory(const SweepSpec& spec, double gate_p, double meas_p, std::uint64_t seed) {
  ElectionConfig config = ElectionConfig::for_candidates(spec.ballot.n_candidates(), 2);
  config.shots_per_ballot = spec.shots;
  ElectionRun run(config, gate_p, meas_p, seed);
  Voter voter("sweep-voter");
  run.register_voter(voter, true);
  run.cast_vote(voter, spec.ballot, spec.signature, {spec.bell_variant, {0, 1}});
  run.scrutinize_and_record(voter);
  if (!run.voter_verify(voter)) throw Error(ErrorCode::InvalidLedger, "sweep voter failed verification");
  const KeyRelease release = run.release_keys(voter);
  const TallyReport report = run.release_and_tally(std::span(&release, 1));
  return off_support_fraction(report.audits.at(0).counts, spec.ballot);
}

/// Trajectory t of point i uses seed derive_seed(derive_seed(seed, i), t).
/// Rows come out in p order and each mean sums trajectories in index order,
/// so the result does not depend on `jobs`.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned jobs = 1) {
  spec.validate();
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < spec.p_values.size(); ++i) {
    const double p = spec.p_values[i];
    const double gate_p = spec.error_axis == ErrorAxis::Gate ? p : spec.fixed_other_p;
    const double meas_p = spec.error_axis == ErrorAxis::Gate ? spec.fixed_other_p : p;
    const std::uint64_t point_seed = derive_seed(spec.seed, i);
    std::vector<double> fractions(spec.trajectories);

    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(spec.trajectories)));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t t = w; t < spec.trajectories; t += workers) {
            fractions[t] = sweep_trajectory(spec, gate_p, meas_p, derive_seed(point_seed, t));
          }
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }

    double sum = 0.0;
    for (double f : fractions) sum += f;
    const double mean = sum / static_cast<double>(fractions.size());
    double sq = 0.0;
    for (double f : fractions) sq += (f - mean) * (f - mean);
    const double sd = fractions.size() > 1 ? std::sqrt(sq / static_cast<double>(fractions.size() - 1)) : 0.0;
    rows.push_back({p, mean, sd, spec.trajectories, spec.shots});
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out(kSweepCsvHeader);
  out += '\n';
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%.6f,%.6f,%.6f,%zu,%llu\n", r.p, r.mean_noise_fraction, r.std, r.trajectories,
                  static_cast<unsigned long long>(r.shots));
    out += line;
  }
  return out;
}

}  // namespace qvote
