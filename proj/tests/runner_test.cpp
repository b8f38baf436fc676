#include <gtest/gtest.h>

#include <string>

#include "qvote/runner.hpp"

namespace qvote {
namespace {

json sample_config() {
  return json::parse(R"({
    "n_candidates": 4, "shots": 1024, "seed": 20231101,
    "noise": {"gate_error_p": 0.0, "meas_error_p": 0.0},
    "voters": [
      {"unique_id": "alice-01", "eligible": true, "ballot": "1101", "signature": ["Z@0", "X@1"], "bell_variant": "PhiPlus"},
      {"unique_id": "bob-02", "eligible": true, "ballot": "0110", "signature": ["H@1"], "bell_variant": "PsiMinus"},
      {"unique_id": "mallory", "eligible": false, "ballot": "0001"},
      {"unique_id": "alice-01", "eligible": true, "ballot": "0001"}
    ]})");
}

SweepSpec small_sweep(ErrorAxis axis, std::vector<double> p) {
  SweepSpec s;
  s.error_axis = axis;
  s.p_values = std::move(p);
  s.trajectories = 20;
  s.seed = 3;
  return s;
}

TEST(Election, SampleRun) {
  const auto out = run_election(parse_election_config(sample_config()));
  EXPECT_TRUE(out.violations.empty()) << out.summary;
  const auto& t = out.transcript;
  EXPECT_EQ(t["format"], "qvote-transcript/1");
  EXPECT_EQ(t["ledger"].size(), 2u);
  EXPECT_EQ(t["voters"][2]["status"], "ineligible");
  EXPECT_EQ(t["voters"][3]["status"], "duplicate");
  EXPECT_EQ(t["ballots"][0]["decoded"], "1101");
  EXPECT_EQ(t["ballots"][1]["decoded"], "0110");
  EXPECT_EQ(t["tally"]["winners"], json::parse(R"(["c2"])"));
  EXPECT_NE(out.summary.find("winners: c2"), std::string::npos);
}

TEST(Election, DeterministicTranscript) {
  const auto in = parse_election_config(sample_config());
  EXPECT_EQ(run_election(in).transcript.dump(2), run_election(in).transcript.dump(2));
  auto other = in;
  other.seed += 1;
  EXPECT_NE(run_election(in).transcript.dump(), run_election(other).transcript.dump());
}

TEST(Election, NoisyRunIsDeterministicToo) {
  auto in = parse_election_config(sample_config());
  in.gate_error_p = 0.02;
  in.meas_error_p = 0.01;
  EXPECT_EQ(run_election(in).transcript.dump(), run_election(in).transcript.dump());
}

TEST(Election, RejectsBadConfigs) {
  auto one = sample_config();
  one["n_candidates"] = 1;
  EXPECT_THROW(parse_election_config(one), Error);

  auto mismatch = sample_config();
  mismatch["voters"][0]["ballot"] = "110";
  try {
    parse_election_config(mismatch);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigMismatch);
  }

  auto empty = sample_config();
  empty["voters"][0]["ballot"] = "0000";
  EXPECT_THROW(parse_election_config(empty), Error);

  auto noisy = sample_config();
  noisy["noise"]["gate_error_p"] = 1.5;
  EXPECT_THROW(parse_election_config(noisy), Error);

  EXPECT_THROW(parse_election_config(json::parse(R"({"voters": []})")), Error);
}

TEST(Election, TwoCandidatesUseTwoQubits) {
  auto cfg = sample_config();
  cfg["n_candidates"] = 2;
  cfg["voters"] = json::parse(R"([{"unique_id": "a", "ballot": "01"}])");
  const auto out = run_election(parse_election_config(cfg));
  EXPECT_EQ(out.transcript["config"]["n_qubits"], 2);
  EXPECT_EQ(out.transcript["ballots"][0]["decoded"], "01");
}

TEST(Election, TranscriptOmitsUniqueIds) {
  const std::string dump = run_election(parse_election_config(sample_config())).transcript.dump();
  EXPECT_EQ(dump.find("alice-01"), std::string::npos);
  EXPECT_EQ(dump.find("bob-02"), std::string::npos);
  EXPECT_EQ(dump.find("mallory"), std::string::npos);
}

TEST(Replay, IdenticalForRecordedRun) {
  const auto t = run_election(parse_election_config(sample_config())).transcript;
  const auto report = replay(json::parse(t.dump()));
  EXPECT_TRUE(report.identical) << report.divergence;
}

TEST(Replay, IdenticalForNoisyRun) {
  auto in = parse_election_config(sample_config());
  in.gate_error_p = 0.05;
  in.meas_error_p = 0.02;
  const auto report = replay(run_election(in).transcript);
  EXPECT_TRUE(report.identical) << report.divergence;
}

TEST(Replay, EditedCountDiverges) {
  auto t = run_election(parse_election_config(sample_config())).transcript;
  auto& counts = t["ballots"][1]["counts"];
  counts[counts.begin().key()] = counts.begin().value().get<int>() + 1;
  const auto report = replay(t);
  EXPECT_FALSE(report.identical);
  EXPECT_EQ(report.divergence, "ballot 1 count table");
}

TEST(Replay, EditedLedgerFailsVerification) {
  auto t = run_election(parse_election_config(sample_config())).transcript;
  t["ledger"][1]["signing_details"] = "X@0";
  const auto report = replay(t);
  EXPECT_FALSE(report.identical);
  EXPECT_EQ(report.divergence, "ledger verification failed at block 1");
}

TEST(Replay, EditedTallyDiverges) {
  auto t = run_election(parse_election_config(sample_config())).transcript;
  t["tally"]["winners"] = json::parse(R"(["c1"])");
  EXPECT_EQ(replay(t).divergence, "tally");
}

TEST(Sweep, ZeroNoiseGivesZero) {
  for (auto axis : {ErrorAxis::Gate, ErrorAxis::Measurement}) {
    const auto rows = run_sweep(small_sweep(axis, {0.0}), 2);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].mean_noise_fraction, 0.0);
    EXPECT_EQ(rows[0].std, 0.0);
  }
}

TEST(Sweep, FullReadoutErrorOnFullBallot) {
  auto spec = small_sweep(ErrorAxis::Measurement, {1.0});
  spec.ballot = Ballot::parse("1111");
  EXPECT_EQ(run_sweep(spec)[0].mean_noise_fraction, 0.0);
}

TEST(Sweep, MeasurementAxisMatchesBitFlipModel) {
  // For 1101 only |10> is off support. Each of the three support states
  // reaches |10> by a specific flip pattern; summing gives
  // (1/3)[p(1-p) + p(1-p) + p^2] = (2p - p^2) / 3.
  auto spec = small_sweep(ErrorAxis::Measurement, {0.05, 0.2});
  spec.trajectories = 50;
  for (const auto& row : run_sweep(spec, 4)) {
    const double expected = (2 * row.p - row.p * row.p) / 3.0;
    const double se = std::sqrt(expected * (1 - expected) / (1024.0 * 50.0));
    EXPECT_NEAR(row.mean_noise_fraction, expected, 4 * se) << "p=" << row.p;
  }
}

TEST(Sweep, GateNoiseIncreasesOffSupport) {
  const auto rows = run_sweep(small_sweep(ErrorAxis::Gate, {0.01, 0.1}), 2);
  EXPECT_LT(rows[0].mean_noise_fraction, rows[1].mean_noise_fraction);
}

TEST(Sweep, ResultIndependentOfThreadCount) {
  const auto spec = small_sweep(ErrorAxis::Gate, {0.02, 0.05});
  EXPECT_EQ(sweep_csv(run_sweep(spec, 1)), sweep_csv(run_sweep(spec, 5)));
}

TEST(Sweep, CsvFormat) {
  const std::string csv = sweep_csv(run_sweep(small_sweep(ErrorAxis::Gate, {0.0, 0.5}), 1));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "p,mean_noise_fraction,std,trajectories,shots");
  EXPECT_NE(csv.find("\n0.000000,0.000000,0.000000,20,1024\n"), std::string::npos);
}

TEST(Sweep, SpecValidation) {
  EXPECT_THROW(parse_sweep_spec(json::parse(R"({"error_axis": "phase", "p_values": [0.1]})")), Error);
  EXPECT_THROW(parse_sweep_spec(json::parse(R"({"error_axis": "gate", "p_values": [0.2, 0.1]})")), Error);
  EXPECT_THROW(parse_sweep_spec(json::parse(R"({"error_axis": "gate", "p_values": []})")), Error);
  EXPECT_THROW(parse_sweep_spec(json::parse(R"({"error_axis": "gate", "p_values": [1.2]})")), Error);
  const auto s = parse_sweep_spec(json::parse(R"({"error_axis": "measurement", "p_values": [0.1], "seed": 4})"));
  EXPECT_EQ(s.error_axis, ErrorAxis::Measurement);
  EXPECT_EQ(s.seed, 4u);
  EXPECT_EQ(s.ballot.to_string(), "1101");
}

}  // namespace
}  // namespace qvote
